"""Python bindings for the widesense spectrum-sensing library."""

import json as _json

from ._widesense import *  # noqa: F401,F403
from ._widesense import (
    DomainError,
    NumericalError,
    __version__,
    estimate_m as _estimate_m,
    estimate_noise_scenario3 as _estimate_noise_scenario3,
    generate_wideband_signal as _generate_wideband_signal,
    run_experiment as _run_experiment,
)


def _as_json(obj):
    if obj is None or isinstance(obj, str):
        return obj
    return _json.dumps(obj)


def generate_wideband_signal(scene, n_total, seed):
    """Synthesize a wideband record; `scene` is a dict or JSON string."""
    return _generate_wideband_signal(_as_json(scene), n_total, seed)


def estimate_m(energies, samples_per_subband=1, prior=None):
    return _estimate_m(list(energies), samples_per_subband, _as_json(prior))


def estimate_noise_scenario3(signal, segment_length=256, overlap=0.5, n_scales=2, prior=None):
    return _estimate_noise_scenario3(signal, segment_length, overlap, n_scales, _as_json(prior))


def run_experiment(experiment, config=None):
    """Run a harness experiment and return its CSV text."""
    return _run_experiment(experiment, _as_json(config or {}))
