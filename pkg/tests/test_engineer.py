import math

import numpy as np
import pytest

from modegate import config, engineer, gatekernel as gk
from modegate.errors import InfeasibleError

TAU = 69.466e-6
K = np.array([92, 95, 97])
TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def ideal():
    return config.build_spectrum(config.load_config("paper3ion-ideal"))


@pytest.fixture(scope="module")
def paper_windows():
    centers = TWO_PI * np.array([2.649e6, 2.735e6, 2.793e6])
    return engineer.FrequencyWindow.around(centers, TWO_PI * 500.0, 60e-6, 80e-6)


def test_recovers_constructed_solution():
    tau_star, k_star = 71.25e-6, np.array([90, 94, 99])
    centers = 4 * math.pi * k_star / tau_star
    win = engineer.FrequencyWindow.around(centers, TWO_PI * 200.0, 60e-6, 80e-6)
    best = engineer.search_condition1(win)[0]
    assert best.k == tuple(k_star)
    assert best.residual == 0.0
    assert best.tau == pytest.approx(tau_star, rel=1e-10)


def test_paper_windows(paper_windows):
    sols = engineer.search_condition1(paper_windows, top_m=5)
    match = [s for s in sols if s.k == (92, 95, 97)]
    assert match and match[0].tau == pytest.approx(TAU, abs=0.01e-6)
    f = match[0].ideal_frequencies() / TWO_PI
    np.testing.assert_allclose(f, [2.649e6, 2.735e6, 2.793e6], atol=1e3)
    assert [(s.residual, s.tau) for s in sols] == sorted((s.residual, s.tau) for s in sols)


def test_solution_invariants(paper_windows):
    for s in engineer.search_condition1(paper_windows, top_m=10):
        assert s.residual <= 0.5
        assert all(np.diff(s.k) > 0)
        target = 4 * math.pi * np.array(s.k) / s.tau
        proj = np.clip(target, paper_windows.omega_min, paper_windows.omega_max)
        assert np.all(proj >= paper_windows.omega_min) and np.all(proj <= paper_windows.omega_max)
        assert np.max(np.abs(proj * s.tau / (4 * math.pi) - s.k)) == pytest.approx(s.residual)


def test_grid_refinement_stability(paper_windows):
    a = engineer.search_condition1(paper_windows, grid_points=10_000)[0]
    b = engineer.search_condition1(paper_windows, grid_points=20_000)[0]
    assert a.k == b.k
    assert abs(a.tau - b.tau) <= 1e-12 * a.tau


def test_infeasible():
    win = engineer.FrequencyWindow.around([1.0, 2.0], 0.1, 1e-3, 2e-3)
    with pytest.raises(InfeasibleError):
        engineer.search_condition1(win)


def test_window_validation():
    with pytest.raises(ValueError):
        engineer.FrequencyWindow([2.0], [1.0], 1e-6, 2e-6)
    with pytest.raises(ValueError):
        engineer.FrequencyWindow([1.0], [2.0], 2e-6, 1e-6)


@pytest.mark.parametrize("l", [193, 192])
def test_sweep_zero_and_mirror_structure(ideal, l):
    d = engineer.design_gate(ideal, 0, 1, TAU, l=l, k=K)
    sweep = engineer.sweep_common_shift(d, (-TWO_PI * 1e3, TWO_PI * 1e3), 201)
    alpha = sweep.column("alpha")
    assert len(sweep) == 201 and alpha[100] == 0.0
    # each mode term is symmetric in dk up to its denominator (4 (k + dk)^2 - l^2)^2,
    # so alpha(+d) / alpha(-d) lies between the per-mode denominator ratios
    dk = sweep.column("delta_omega")[101:] * TAU / (4 * math.pi)
    den = lambda x: (4 * (K[None, :] + x[:, None]) ** 2 - l * l) ** 2
    r = den(-dk) / den(dk)
    ratio = alpha[101:] / alpha[99::-1]
    assert np.all(ratio >= r.min(axis=1) * (1 - 1e-9))
    assert np.all(ratio <= r.max(axis=1) * (1 + 1e-9))
    with pytest.raises(ValueError):
        engineer.sweep_common_shift(d, (0, 1), 1)


def test_sweep_even_below_odd_and_continuous(ideal):
    shifts = TWO_PI * np.linspace(-1e3, 1e3, 201)
    odd = engineer.sweep_common_shift(engineer.design_gate(ideal, 0, 1, TAU, l=193, k=K),
                                      None, 0, shifts).column("alpha")
    even = engineer.sweep_common_shift(engineer.design_gate(ideal, 0, 1, TAU, l=192, k=K),
                                       None, 0, shifts).column("alpha")
    away = shifts != 0
    assert np.all(even[away] < odd[away])
    # alpha ~ d_omega^2 near the center, so neighbours differ by at most (20/10)^2
    for a in (odd[shifts < 0], odd[shifts > 0]):
        ratio = a[1:] / a[:-1]
        assert np.all((ratio > 0.2) & (ratio < 5.0))


def test_sweep_quoted_static_residual():
    cfg = config.load_config("paper3ion")
    spec = config.build_spectrum(cfg)
    d = engineer.design_gate(spec, 0, 1, TAU, l=193, k=K)
    row = engineer.sweep_common_shift(d, None, 0, [0.0]).column("alpha")[0]
    assert row == d.alpha > 0


def test_delta_k_budget(ideal):
    odd = engineer.design_gate(ideal, 0, 1, TAU, l=193, k=K)
    even = engineer.design_gate(ideal, 0, 1, TAU, l=192, k=K)
    report = engineer.delta_k_budget([odd, even], 1e-4)
    assert set(report) == {193, 192}
    assert np.all(report[192] > report[193])
    assert np.all(engineer.delta_k_budget(odd, 0.0)[193] == 0)


def test_design_gate_selects_and_calibrates(ideal):
    d = engineer.design_gate(ideal, 0, 1, TAU, parity="odd", k=K)
    assert d.pulse.is_odd
    assert abs(d.chi) == pytest.approx(math.pi / 8, abs=1e-12)
    np.testing.assert_allclose(d.frequencies, ideal.frequencies, rtol=1e-14)
    assert d.alpha == pytest.approx(gk.alpha_factored(ideal, 0, 1, K, d.pulse, d.delta_k, d.nbar))
