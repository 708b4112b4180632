import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modegate import config, modes
from modegate.errors import DegenerateCouplingError, PulseDomainError, SelectionError
from modegate.pulse import (
    PulseSpec,
    SweepResult,
    calibrate_omega,
    eval_pulse,
    one_sided_derivatives,
    scan_l,
    select_l,
)
from modegate.gatekernel import chi_analytic

TAU = 69.466e-6
K = np.array([92, 95, 97])


def single_mode(prod=1.0):
    # mode 0 couples the two ions with eta^0 eta^1 = prod; mode 1 is dark
    eta = np.array([[1.0, prod], [0.0, 0.0]])
    return modes.ModeSpectrum(np.array([4 * math.pi, 8 * math.pi]), np.eye(2), eta)


@pytest.fixture(scope="module")
def ideal():
    return config.build_spectrum(config.load_config("paper3ion-ideal"))


@pytest.mark.parametrize("l", [1, 2, 192, 193])
def test_zeros_are_exact(l):
    spec = PulseSpec(l, 1.3e6, TAU)
    assert eval_pulse(spec, 0.0) == 0.0
    assert eval_pulse(spec, TAU / 2) == 0.0
    assert eval_pulse(spec, TAU) == 0.0


def test_branches():
    spec = PulseSpec(3, 2.0, 1.0)
    assert eval_pulse(spec, 0.1) == pytest.approx(2 * math.sin(0.6 * math.pi), rel=1e-14)
    assert eval_pulse(spec, 0.6) == pytest.approx(-2 * math.sin(0.6 * math.pi), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 400), st.floats(1e3, 1e7), st.floats(1e-6, 1e-3), st.integers(0, 2**32 - 1))
def test_antisymmetry(l, omega, tau, seed):
    spec = PulseSpec(l, omega, tau)
    t = np.random.default_rng(seed).uniform(0, tau / 2, 1000)
    assert np.max(np.abs(eval_pulse(spec, t + tau / 2) + eval_pulse(spec, t))) <= 1e-12 * omega


def test_domain_error():
    spec = PulseSpec(2, 1.0, 1.0)
    with pytest.raises(PulseDomainError):
        eval_pulse(spec, -1e-9)
    with pytest.raises(PulseDomainError):
        eval_pulse(spec, np.array([0.5, 1.0 + 1e-9]))


def test_invalid_spec():
    with pytest.raises(ValueError):
        PulseSpec(0, 1.0, 1.0)
    with pytest.raises(ValueError):
        PulseSpec(2, 1.0, 0.0)


@pytest.mark.parametrize("l", [1, 7, 193])
def test_odd_is_smooth(l):
    spec = PulseSpec(l, 1.0, 1.0)
    h = 1e-2 / (2 * math.pi * l)
    left, right = one_sided_derivatives(spec, 0.5, h)
    assert abs(left - right) < 1e-6
    eps = 1e-7
    jump = abs(eval_pulse(spec, 0.5 - eps) - eval_pulse(spec, 0.5 + eps))
    assert jump <= 4 * math.pi * l * eps * (1 + 1e-6)


@pytest.mark.parametrize("l", [2, 8, 192])
def test_even_has_cusp(l):
    spec = PulseSpec(l, 1.0, 1.0)
    h = 1e-2 / (2 * math.pi * l)
    left, right = one_sided_derivatives(spec, 0.5, h)
    assert left - right == pytest.approx(4 * l * math.pi, rel=1e-6)


def test_scan_single_mode_values():
    scan = scan_l(single_mode(), 0, 1, [1, 2], 1.0, l_max=4)
    vals = scan.column("value")
    assert vals[0] == pytest.approx(1 / (6 * math.pi), rel=1e-14)
    assert vals[0] == pytest.approx(0.0530516, abs=1e-7)
    assert vals[1] == pytest.approx(3 / 16 / (2 * math.pi), rel=1e-14)
    assert scan.column("resonance").tolist() == [0, 1, 0, 1]
    assert scan.column("parity").tolist() == [1, 0, 1, 0]


def test_scan_marks_paper_resonances(ideal):
    scan = scan_l(ideal, 0, 1, K, TAU)
    marked = scan.column("l")[scan.column("resonance") == 1]
    assert marked.tolist() == [184, 190, 194]
    assert len(scan) == 2 * 97 + 20


def test_scan_validation(ideal):
    with pytest.raises(ValueError):
        scan_l(ideal, 1, 1, K, TAU)
    with pytest.raises(ValueError):
        scan_l(ideal, 0, 1, [92, 95], TAU)


def test_select_rules():
    rows = [[1, 1, 0.2], [2, 0, 0.5], [3, 1, 0.5], [4, 0, 0.1]]
    scan = SweepResult(("l", "parity", "value"), rows)
    assert select_l(scan) == 2  # tie with l = 3 goes to the smaller l
    assert select_l(scan, "odd") == 3
    assert select_l(scan, 0) == 2
    single = SweepResult(("l", "parity", "value"), [[7, 1, 0.3]])
    assert select_l(single) == 7
    with pytest.raises(SelectionError):
        select_l(single, "even")


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_select_invariant_under_eta_scale(s):
    rng = np.random.default_rng(5)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    eta = q * 0.05
    base = modes.ModeSpectrum(np.ones(3), q, eta)
    scaled = modes.ModeSpectrum(np.ones(3), q, eta * s)
    k = [40, 43, 47]
    for par in ("odd", "even"):
        assert select_l(scan_l(base, 0, 1, k, 1.0), par) == select_l(scan_l(scaled, 0, 1, k, 1.0),
                                                                     par)


@pytest.mark.parametrize("l", [192, 193])
def test_calibration(ideal, l):
    pulse = calibrate_omega(ideal, 0, 1, K, TAU, l)
    chi = chi_analytic(ideal, 0, 1, K, pulse)
    assert abs(chi) == pytest.approx(math.pi / 8, abs=1e-12)
    assert np.sign(chi) == pulse.chi_sign
    doubled = chi_analytic(ideal, 0, 1, K, pulse.with_omega(2 * pulse.omega))
    assert doubled == pytest.approx(4 * chi, rel=1e-12)


def test_calibration_zero_and_negative(ideal):
    assert calibrate_omega(ideal, 0, 1, K, TAU, 193, theta_target=0.0).omega == 0.0
    pos = calibrate_omega(ideal, 0, 1, K, TAU, 193)
    neg = calibrate_omega(ideal, 0, 1, K, TAU, 193, theta_target=-math.pi / 2)
    assert neg.omega == pos.omega and neg.chi_sign == -pos.chi_sign


def test_calibration_decoupled_pair():
    with pytest.raises(DegenerateCouplingError):
        calibrate_omega(single_mode(0.0), 0, 1, [1, 2], 1.0, 1)
