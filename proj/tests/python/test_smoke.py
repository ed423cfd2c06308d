import csv
import io
import math

import numpy as np
import pytest

import widesense as ws


def test_mp_support_and_cdf():
    assert ws.mp_support(1.0, 0.25) == pytest.approx((0.25, 2.25))
    law = ws.MarchenkoPasturLaw(1.0, 0.25)
    assert law.cdf(law.b) == pytest.approx(1.0, abs=1e-6)
    assert ws.MarchenkoPasturLaw(1.0, 2.0).atom_mass() == pytest.approx(0.5)
    with pytest.raises(ValueError):
        ws.mp_support(-1.0, 0.5)


def test_eigenvalues_closed_form():
    r = np.array([[2, 1j], [-1j, 2]], dtype=complex)
    assert np.allclose(ws.hermitian_eigenvalues(r), [3.0, 1.0])


def test_frame_and_statistics():
    y = ws.generate_narrowband_frame([0j] * 7, 1.0, 100, False, 3)
    assert y.shape == (7, 100)
    eig = ws.hermitian_eigenvalues(ws.sample_covariance(y))
    t = ws.mp_edge_statistic(eig, 1.0, 7, 100)
    assert 0.3 < t < 1.6
    assert ws.agm_statistic(eig) >= 1.0
    assert ws.energy_statistic(y, 1.0) == pytest.approx(sum(eig) / 7)
    assert ws.decide(1.0, 1.0) == "H0"


def test_glrt_examples():
    assert ws.estimate_m([1, 1, 100, 100], 1) == 2
    assert ws.estimate_m([7, 1, 100, 3], 1, prior={"kind": "table", "pmf": [0, 0, 1, 0]}) == 3
    est = ws.noise_variance([2, 4], 1, 1)
    assert est["sigma2_hat"] == pytest.approx(2.0)


def test_wideband_pipeline():
    scene = {
        "total_bandwidth": 1.0,
        "noise_sigma2": 2.0,
        "subbands": [
            {"start": 0.0, "end": 0.5, "occupied": False, "power": 0.0},
            {"start": 0.5, "end": 1.0, "occupied": True, "power": 20.0},
        ],
    }
    x = ws.generate_wideband_signal(scene, 1 << 14, 5)
    assert x.dtype == np.complex128 and x.size == 1 << 14
    freqs, power = ws.estimate_psd(x, 256, 0.5)
    assert power[200] > 5 * power[50]
    est = ws.estimate_noise_scenario3(x)
    assert abs(est["sigma2_hat"] - 2.0) < 0.4


def test_run_experiment_csv():
    text = ws.run_experiment("mp-check", {"K": 4, "N": 20, "trials": 3})
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(lines))))
    assert len(rows) == 3
    assert all(math.isfinite(float(r["ks"])) for r in rows)
    with pytest.raises(ValueError):
        ws.run_experiment("mp-check", {"bogus": 1})
