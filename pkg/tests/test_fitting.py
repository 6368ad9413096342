import numpy as np
import pytest

from qdbell.calibration import PowerCalibration
from qdbell.errors import ParameterError
from qdbell.fitting import (
    PROTOCOL_GAMMA_D,
    Dataset,
    ModelPoint,
    fit,
    fit_g2_saturation,
    fit_transmission_map,
    load_dataset,
    staged_protocol,
    predict,
)
from qdbell.params import FILTERED, TRANSMISSION_MAP_FIT, ghz_to_rad_ns

TRUE_ETA = 0.0012
# saturating powers: n = 2 eta P / (beta Gamma^2) spans 4e-4 .. 0.4
POWERS_UW = np.array([30.0, 300.0, 1e3, 3e3, 1e4, 3e4])
DETUNINGS = ghz_to_rad_ns(np.linspace(-3, 3, 31))


def _transmission_data(noise=0.0, seed=1):
    truth = ModelPoint(TRANSMISSION_MAP_FIT, PowerCalibration(TRUE_ETA))
    D, P = np.meshgrid(DETUNINGS, POWERS_UW)
    template = Dataset("transmission", D.ravel(), np.zeros(D.size), power_uW=P.ravel())
    clean = predict(truth, template)
    rng = np.random.default_rng(seed)
    observed = clean * (1 + noise * rng.standard_normal(clean.size))
    return truth, Dataset("transmission", D.ravel(), observed, power_uW=P.ravel())


def _g2_data(taus, ns, params=FILTERED):
    T, N = np.meshgrid(taus, ns)
    template = Dataset("g2", T.ravel(), np.zeros(T.size), n=N.ravel())
    return Dataset("g2", T.ravel(), predict(ModelPoint(params), template), n=N.ravel())


def _start(beta, sigma_factor, eta):
    p = TRANSMISSION_MAP_FIT.replace(beta=beta, sigma_sd=TRANSMISSION_MAP_FIT.sigma_sd * sigma_factor)
    return ModelPoint(p, PowerCalibration(eta))


def test_noise_free_map_is_recovered_exactly():
    truth, data = _transmission_data()
    res = fit_transmission_map(data, ("eta", "beta", "sigma_sd"), _start(0.88, 1.2, 0.0015))
    assert res.residual < 1e-10
    assert res.values()["eta"] == pytest.approx(TRUE_ETA, rel=1e-4)
    assert res.values()["beta"] == pytest.approx(truth.params.beta, rel=1e-4)
    assert res.values()["sigma_sd"] == pytest.approx(truth.params.sigma_sd, rel=1e-4)
    assert res.converged


def test_eta_alone_is_recovered_within_two_percent():
    _, data = _transmission_data(noise=0.01)
    start = ModelPoint(TRANSMISSION_MAP_FIT, PowerCalibration(0.002))
    res = fit_transmission_map(data, ("eta",), start)
    assert res.values()["eta"] == pytest.approx(TRUE_ETA, rel=0.02)


def test_noisy_map_recovery_and_start_independence():
    truth, data = _transmission_data(noise=0.01)
    results = [
        fit_transmission_map(data, ("eta", "beta", "sigma_sd"), _start(0.85, 1.3, 0.002)),
        fit_transmission_map(data, ("eta", "beta", "sigma_sd"), _start(0.97, 0.7, 0.0008)),
    ]
    for res in results:
        v = res.values()
        assert v["eta"] == pytest.approx(TRUE_ETA, rel=0.05)
        assert v["beta"] == pytest.approx(truth.params.beta, rel=0.05)
        assert v["sigma_sd"] == pytest.approx(truth.params.sigma_sd, rel=0.05)
    a, b = (np.array(list(r.values().values())) for r in results)
    np.testing.assert_allclose(a, b, rtol=1e-5)
    assert results[0].residual == pytest.approx(results[1].residual, rel=1e-8)


def test_best_residual_never_increases():
    _, data = _transmission_data(noise=0.01)
    res = fit_transmission_map(data, ("eta",), ModelPoint(TRANSMISSION_MAP_FIT, PowerCalibration(0.003)))
    history = np.array(res.history)
    assert np.all(np.diff(history) <= 0)
    assert history[-1] == res.residual


def test_noise_free_g2_curves_are_recovered():
    taus = np.linspace(-0.5, 0.5, 7)
    data = _g2_data(taus, [0.0024, 0.02, 0.1])
    start = ModelPoint(FILTERED.replace(beta=0.93, sigma_sd=1.3 * FILTERED.sigma_sd))
    res = fit_g2_saturation(data, init=start)
    assert res.values()["beta"] == pytest.approx(FILTERED.beta, abs=1e-4)
    assert res.values()["sigma_sd"] == pytest.approx(FILTERED.sigma_sd, rel=1e-3)
    assert predict(res.point, data)[3] > 100  # g2(0) at the weakest drive


def test_staged_protocol_fixes_dephasing_and_finds_eta():
    _, trans = _transmission_data()
    taus = np.linspace(-0.3, 0.3, 5)
    g2 = _g2_data(taus, [0.0024, 0.02, 0.1], params=TRANSMISSION_MAP_FIT.replace(sigma_irf=0.1))
    init = ModelPoint(TRANSMISSION_MAP_FIT.replace(gamma_d=0.0, sigma_irf=0.1), PowerCalibration(0.002))
    stage1, stage2 = staged_protocol(trans, g2, init, max_evaluations=400)
    assert stage1.free == ("eta",)
    assert stage2.free == ("beta", "sigma_sd")
    assert stage2.params.gamma_d == PROTOCOL_GAMMA_D
    assert stage1.values()["eta"] == pytest.approx(TRUE_ETA, rel=1e-3)
    assert stage2.values()["beta"] == pytest.approx(TRANSMISSION_MAP_FIT.beta, abs=1e-3)


def test_fit_argument_validation():
    _, data = _transmission_data()
    start = ModelPoint(TRANSMISSION_MAP_FIT, PowerCalibration(TRUE_ETA))
    with pytest.raises(ParameterError):
        fit([data], ("gamma_total",), start)
    with pytest.raises(ParameterError):
        fit([data], (), start)
    with pytest.raises(ParameterError):
        fit([data], ("eta",), ModelPoint(TRANSMISSION_MAP_FIT))
    g2 = _g2_data([0.0], [0.01, 0.02])
    with pytest.raises(ParameterError):
        fit_g2_saturation(g2, init=ModelPoint(FILTERED))
    with pytest.raises(ParameterError):
        fit_transmission_map(g2, ("beta",), start)
    single = Dataset("transmission", DETUNINGS, np.ones(DETUNINGS.size), n=np.full(DETUNINGS.size, 0.01))
    with pytest.raises(ParameterError):
        fit_transmission_map(single, ("beta",), start)


def test_dataset_validation():
    with pytest.raises(ParameterError):
        Dataset("spectrum", [0.0], [1.0], n=[0.1])
    with pytest.raises(ParameterError):
        Dataset("transmission", [0.0], [1.0])
    with pytest.raises(ParameterError):
        Dataset("transmission", [0.0], [1.0], n=[0.1], power_uW=[1.0])
    with pytest.raises(ParameterError):
        Dataset("transmission", [0.0, 1.0], [1.0], n=[0.1, 0.1])
    with pytest.raises(ParameterError):
        Dataset("g2", [0.0], [np.nan], n=[0.1])
    with pytest.raises(ParameterError):
        Dataset("g2", [0.0], [1.0], power_uW=[1.0])


def test_counts_give_poisson_weights():
    d = Dataset("g2", [0.0, 1.0], [2.0, 1.0], n=[0.1, 0.1], counts=[400.0, 0.0])
    np.testing.assert_allclose(d.weights, [1 / 400, 1.0])


def test_csv_loader(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("# comment\ndetuning_GHz,power_uW,value,weight\n-1.0,30,0.9,2\n1.0,300,0.5,1\n")
    d = load_dataset(path)
    assert d.kind == "transmission"
    np.testing.assert_allclose(d.axis, ghz_to_rad_ns(np.array([-1.0, 1.0])))
    np.testing.assert_allclose(d.power_uW, [30, 300])
    np.testing.assert_allclose(d.weights, [2, 1])

    path = tmp_path / "g.csv"
    path.write_text("tau_ns,n,g2,counts\n0.0,0.01,80,1000\n0.5,0.01,1.1,900\n")
    g = load_dataset(path)
    assert g.kind == "g2" and g.weight is None
    np.testing.assert_allclose(g.weights, [1e-3, 1 / 900])

    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(ParameterError):
        load_dataset(path)
