import json
import math
import os

import numpy as np
import pytest

import latentpath as lp

DATA_DIR = os.environ.get("LATENTPATH_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))

THREE_FACTOR = """
X =~ x1 + x2 + x3
M =~ m1 + m2 + m3
Y =~ y1 + y2 + y3
M ~ X
Y ~ M + X
"""


def test_version():
    assert lp.__version__ == "0.1.0"


def test_bundled_model_counts():
    spec = lp.load_model(os.path.join(DATA_DIR, "wuliangye.model"))
    counts = lp.count_df(lp.build_matrices(spec))
    assert counts["parameters"] == 52
    assert counts["df"] == 179


def test_parse_round_trip():
    spec = lp.parse_model(THREE_FACTOR)
    assert lp.parse_model(spec.to_text()) == spec


def test_syntax_error_is_raised():
    with pytest.raises(lp.SyntaxError):
        lp.parse_model("F =~")


def test_f_ml_reference():
    assert lp.f_ml(2 * np.eye(2), np.eye(2), 2) == pytest.approx(0.3862943611198908, abs=1e-12)


def test_fit_recovers_planted_paths():
    spec = lp.parse_model(THREE_FACTOR)
    pm = lp.build_matrices(spec)
    theta = lp.assign_parameters(pm, {"M~X": 0.5, "Y~M": 0.4, "Y~X": 0.2})
    names, values = lp.simulate(pm, theta, 3000, 11)
    result = lp.fit(spec, lp.covariance(names, values))
    assert result.converged
    assert result.find("M~X").estimate == pytest.approx(0.5, abs=0.08)
    assert result.find("Y~M").estimate == pytest.approx(0.4, abs=0.08)
    report = json.loads(result.to_json())
    assert report["converged"] is True


def test_decompose_additivity():
    beta = np.array([[0.0, 0.0], [0.4, 0.0]])
    gamma = np.array([[0.3], [0.2]])
    e = lp.decompose(beta, gamma)
    np.testing.assert_allclose(e["total_xi"], e["direct_xi"] + e["indirect_xi"], atol=1e-12)
    assert e["indirect_xi"][1, 0] == pytest.approx(0.12)


def test_psychometrics():
    assert lp.composite_reliability([0.703, 0.647, 0.585]) == pytest.approx(0.6821, abs=5e-4)
    r = np.array([[1.0, 0.5], [0.5, 1.0]])
    chi, df, p = lp.bartlett(r, 100)
    assert chi == pytest.approx(28.049002064048636, abs=1e-9)
    assert df == 1
    assert math.isfinite(p)


def test_efa_two_clusters():
    r = np.full((6, 6), 0.1)
    r[:3, :3] = 0.5
    r[3:, 3:] = 0.5
    np.fill_diagonal(r, 1.0)
    l = lp.efa(r)
    assert l.loadings.shape == (6, 2)
    assert np.max(np.abs(l.loadings), axis=1).min() > 0.5
