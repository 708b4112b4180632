"""Closed-form entangling phase and residual spin-motion coupling.

All evaluations run in the dimensionless variables (Omega*tau, k, l, dk, eta);
``dk`` is the offset of a mode from its commensurate target,
omega_p = 4 pi (k_p + dk_p) / tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import DEFAULT_NBAR
from .errors import BudgetInfeasibleError, ConfigError, PoleError
from .pulse import PulseSpec

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GateDesign:
    """A calibrated XX gate on ``ion_pair`` together with its quality figures."""

    ion_pair: tuple
    pulse: PulseSpec
    k_indices: np.ndarray
    delta_k: np.ndarray
    chi: float
    alpha: float
    alpha_budget: float
    spectrum: object = field(repr=False, compare=False)
    nbar: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        for name in ("k_indices", "delta_k"):
            arr = np.array(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if np.any(np.abs(self.delta_k) >= 0.5):
            raise ConfigError("|delta_k| must stay below 0.5")

    @property
    def frequencies(self) -> np.ndarray:
        return 4.0 * math.pi * (self.k_indices + self.delta_k) / self.pulse.tau


def commensurate_offsets(frequencies, tau: float, k):
    """dk = omega tau / 4 pi - k, with offsets at the rounding level of k set to 0."""
    x = np.asarray(frequencies, float) * tau / (4.0 * math.pi)
    k = np.asarray(k)
    dk = x - k
    dk[np.abs(dk) <= 4.0 * np.spacing(np.abs(x))] = 0.0
    return dk


def assign_k(frequencies, tau: float):
    """Nearest commensurate integers and offsets: omega tau / 4 pi = k + dk."""
    x = np.asarray(frequencies, float) * tau / (4.0 * math.pi)
    frac = x - np.floor(x)
    if np.any(frac == 0.5):
        raise PoleError("mode sits exactly halfway between two commensurate integers")
    k = np.rint(x).astype(int)
    if np.any(k < 1):
        raise ConfigError("gate too short: a mode maps to k = 0")
    return k, commensurate_offsets(frequencies, tau, k)


def _nbar(nbar, n):
    if nbar is None:
        return np.full(n, DEFAULT_NBAR)
    out = np.broadcast_to(np.asarray(nbar, float), (n,))
    if np.any(out < 0):
        raise ConfigError("nbar must be non-negative")
    return out


def _resonant(k, l):
    return np.flatnonzero(2 * np.asarray(k) == l)


def chi_unit(pair_product, k, l: int) -> float:
    """chi / (Omega tau)^2 at exact commensurate frequencies."""
    k = np.asarray(k, dtype=float)
    pair_product = np.asarray(pair_product, float)
    terms = np.empty_like(k)
    res = 2 * k == l
    off = ~res
    terms[off] = pair_product[off] * k[off] / (4.0 * k[off] ** 2 - l * l)
    terms[res] = pair_product[res] * 3.0 / (8.0 * l)
    return float(np.sum(terms)) / TWO_PI


def chi_analytic(spectrum, i: int, j: int, k, pulse: PulseSpec) -> float:
    """Entangling phase chi_ij of the two-segment pulse.

    Valid at exact commensurate frequencies only; for detuned modes use
    :func:`modegate.oracle.chi_oracle`.
    """
    return (pulse.omega * pulse.tau) ** 2 * chi_unit(spectrum.pair_product(i, j), k, pulse.l)


def half_gate_chi(spectrum, i: int, j: int, pulse: PulseSpec, settings=None, k=None):
    """Entangling phase accumulated over each half of the gate, by quadrature.

    The two halves agree only at commensurate frequencies; pass ``k`` to
    evaluate at 4 pi k / tau instead of the spectrum's own frequencies.
    """
    from .oracle import chi_oracle

    tau = pulse.tau
    w = None if k is None else 4.0 * math.pi * np.asarray(k, float) / tau
    first = chi_oracle(spectrum, i, j, pulse, settings, window=(0.0, tau / 2), frequencies=w)
    second = chi_oracle(spectrum, i, j, pulse, settings, window=(tau / 2, tau), frequencies=w)
    return first, second


def _expi_ratio(x):
    """(exp(i x / 2) - 1) / (i x), the integral of exp(i x s) over s in [0, 1/2]."""
    x = np.asarray(x, float)
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < 1e-6
    xs = x[small]
    out[small] = 0.5 + 0.125j * xs - xs**2 / 48.0
    xb = x[~small]
    out[~small] = np.expm1(0.5j * xb) / (1j * xb)
    return out


def half_interval_integral(l: int, k, delta_k, phase=0.0):
    """Integral of sin(2 l pi s) exp(i(4 pi (k + dk) s + phase)) over s in [0, 1/2].

    Multiply by Omega tau for the dimensional integral of g(t) exp(i(omega t + phi)).
    """
    b = 4.0 * math.pi * (np.asarray(k, float) + np.asarray(delta_k, float))
    a = 2.0 * math.pi * l
    val = (_expi_ratio(b + a) - _expi_ratio(b - a)) / 2j
    return val * np.exp(1j * np.asarray(phase, float))


def mode_integrals(pulse: PulseSpec, k, delta_k, phases=0.0):
    """Full-gate integrals of g(t) exp(i(omega_p t + phi_p)) via the half-gate factorization."""
    dk = np.asarray(delta_k, float)
    factor = -np.expm1(2j * math.pi * dk)
    return pulse.omega * pulse.tau * factor * half_interval_integral(pulse.l, k, dk, phases)


def _check_modes(k, delta_k, tau):
    w = 4.0 * math.pi * (np.asarray(k, float) + np.asarray(delta_k, float)) / tau
    if np.any(w <= 0):
        raise ConfigError("mode frequencies must be positive")


def alpha_factored(spectrum, i: int, j: int, k, pulse: PulseSpec, delta_k,
                   nbar=None, phases=0.0) -> float:
    """Residual coupling alpha with each mode integral in closed, factored form.

    Thermal factor coth(hbar omega / 2 kB T) is supplied as 2 nbar + 1.
    """
    _check_modes(k, delta_k, pulse.tau)
    n = spectrum.mode_count
    thermal = 2.0 * _nbar(nbar, n) + 1.0
    integ = mode_integrals(pulse, k, delta_k, phases)
    return 0.8 * float(np.sum(thermal * spectrum.pair_square_sum(i, j) * np.abs(integ) ** 2))


def alpha_closed_form(spectrum, i: int, j: int, k, pulse: PulseSpec, delta_k,
                      nbar=None) -> float:
    """Parity-split closed form of alpha; undefined exactly on a pole."""
    _check_modes(k, delta_k, pulse.tau)
    n = spectrum.mode_count
    l = pulse.l
    kk = np.asarray(k, float) + np.asarray(delta_k, float)
    denom = 4.0 * kk**2 - l * l
    if np.any(np.abs(denom) <= 1e-14 * l * l):
        raise PoleError("4 (k + dk)^2 == l^2: use alpha_factored")
    dk = np.asarray(delta_k, float)
    if pulse.is_odd:
        num = np.abs(np.expm1(4j * math.pi * dk)) ** 2
    else:
        num = np.abs(np.expm1(2j * math.pi * dk)) ** 4
    thermal = 2.0 * _nbar(nbar, n) + 1.0
    pref = (l * pulse.omega * pulse.tau) ** 2 / (5.0 * math.pi**2)
    return pref * float(np.sum(thermal * spectrum.pair_square_sum(i, j) * num / denom**2))


def _series_parts(spectrum, i, j, k, pulse):
    """Coefficients of the leading-order bound, coth replaced by 2.

    Returns (weights per mode, resonant index or None, resonant coefficient)
    with alpha ~ sum_p weight_p dk_p^q + coef * dk_res^2, q = 2 (odd) or 4 (even).
    """
    l = pulse.l
    k = np.asarray(k)
    s = spectrum.pair_square_sum(i, j)
    wt2 = (pulse.omega * pulse.tau) ** 2
    res = _resonant(k, l)
    denom = (4.0 * k.astype(float) ** 2 - l * l) ** 2
    weights = np.zeros(len(k))
    off = denom != 0
    if pulse.is_odd:
        weights[off] = 32.0 * l * l * wt2 / 5.0 * s[off] / denom[off]
        return weights, None, 0.0
    weights[off] = 32.0 * l * l * wt2 * math.pi**2 / 5.0 * s[off] / denom[off]
    if res.size:
        p = int(res[0])
        return weights, p, 2.0 * wt2 * math.pi**2 / 5.0 * s[p]
    return weights, None, 0.0


def alpha_series(spectrum, i: int, j: int, k, pulse: PulseSpec, delta_k) -> float:
    """Leading-order upper bound on alpha for small offsets (n-bar < 1 regime)."""
    dk = np.asarray(delta_k, float)
    weights, res, coef = _series_parts(spectrum, i, j, k, pulse)
    power = 2 if pulse.is_odd else 4
    alpha0 = coef * dk[res] ** 2 if res is not None else 0.0
    return float(alpha0 + np.sum(weights * dk**power))


def budget_to_tolerance(design: GateDesign, epsilon: float) -> np.ndarray:
    """Largest common |dk| per mode keeping the leading-order alpha below ``epsilon``.

    For an even harmonic with a resonant mode the static offset of that mode fixes
    an irreducible alpha_0; the remaining budget is shared by the other modes and
    the resonant entry reports the offset at which alpha_0 alone reaches epsilon.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    spec = design.spectrum
    i, j = design.ion_pair
    weights, res, coef = _series_parts(spec, i, j, design.k_indices, design.pulse)
    n = len(weights)
    if epsilon == 0:
        if res is not None and coef * design.delta_k[res] ** 2 > 0:
            raise BudgetInfeasibleError("zero budget with a detuned resonant mode",
                                        coef * design.delta_k[res] ** 2)
        return np.zeros(n)
    total = float(np.sum(weights))
    remaining = epsilon
    out = np.empty(n)
    if res is not None:
        alpha0 = coef * float(design.delta_k[res]) ** 2
        if alpha0 > epsilon:
            raise BudgetInfeasibleError(
                f"alpha_0 = {alpha0:.3e} exceeds the budget {epsilon:.3e}", alpha0)
        remaining = epsilon - alpha0
        out[res] = math.sqrt(epsilon / coef) if coef > 0 else math.inf
    power = 2 if design.pulse.is_odd else 4
    common = (remaining / total) ** (1.0 / power) if total > 0 else math.inf
    mask = np.ones(n, bool)
    if res is not None:
        mask[res] = False
    out[mask] = common
    return out
