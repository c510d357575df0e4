"""Sliding multipole spin-density-wave simulator.

Configurations are passed as JSON text or as dicts; records expose the
probe series and space-time cuts as NumPy arrays.
"""

import json as _json

from . import _core
from ._core import (
    AnalysisError,
    ConfigError,
    DivergenceError,
    Record,
    contrast,
    detector_peak,
    drift,
    larmor_freq,
    phasor_wavenumber,
    pump_rates,
    rabi_sq_from_intensity,
    read_record,
    scaled_to_hz,
    to_multipoles,
    wv_correlation,
)

__all__ = [
    "AnalysisError",
    "ConfigError",
    "DivergenceError",
    "Record",
    "contrast",
    "derived_quantities",
    "detector_peak",
    "drift",
    "flip_experiment",
    "larmor_freq",
    "normalize_config",
    "phasor_wavenumber",
    "pump_rates",
    "rabi_sq_from_intensity",
    "read_record",
    "run",
    "scaled_to_hz",
    "scan",
    "to_multipoles",
    "wv_correlation",
]


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def normalize_config(config):
    """Validated configuration with every default filled in."""
    return _json.loads(_core.normalize_config(_text(config)))


def derived_quantities(config):
    return _json.loads(_core.derived_quantities(_text(config)))


def run(config):
    """Run a simulation; returns a Record."""
    return _core.run(_text(config))


def scan(config, q_values, time=0.0):
    """Linear growth rate per transverse wavenumber (rad/m)."""
    return _core.scan(_text(config), list(q_values), time)


def flip_experiment(config, settle=4000.0):
    return _core.flip_experiment(_text(config), settle)
