"""Commensurability search over gate time, gate assembly and sensitivity sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gatekernel as gk
from .errors import InfeasibleError
from .pulse import SweepResult, calibrate_omega, scan_l, select_l

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class FrequencyWindow:
    """Reachable angular frequency band per mode and the admissible gate-time range."""

    omega_min: np.ndarray
    omega_max: np.ndarray
    tau_min: float
    tau_max: float

    def __post_init__(self):
        lo = np.array(self.omega_min, float)
        hi = np.array(self.omega_max, float)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
            raise ValueError("need one [omega_min, omega_max] pair per mode")
        if np.any(lo >= hi) or np.any(lo <= 0):
            raise ValueError("each window needs 0 < omega_min < omega_max")
        if not 0 < self.tau_min < self.tau_max:
            raise ValueError("need 0 < tau_min < tau_max")
        object.__setattr__(self, "omega_min", lo)
        object.__setattr__(self, "omega_max", hi)

    @classmethod
    def around(cls, centers, half_width, tau_min, tau_max):
        c = np.asarray(centers, float)
        return cls(c - half_width, c + half_width, tau_min, tau_max)

    @property
    def centers(self):
        return 0.5 * (self.omega_min + self.omega_max)


@dataclass(frozen=True)
class CommensurateSolution:
    tau: float
    k: tuple
    residual: float

    def ideal_frequencies(self):
        return FOUR_PI * np.array(self.k, float) / self.tau


def _projected_offsets(windows, tau, k):
    # (proj - target) tau / 4 pi equals proj tau / 4 pi - k, and is exactly 0 inside a window
    target = FOUR_PI * np.asarray(k, float) / tau
    proj = np.clip(target, windows.omega_min, windows.omega_max)
    return (proj - target) * tau / FOUR_PI


def _spread(windows, x, k):
    # worst normalized distance of a window center from its target, at x = 1 / tau
    half = 0.5 * (windows.omega_max - windows.omega_min)
    return float(np.max(np.abs(windows.centers - FOUR_PI * np.asarray(k) * x) / half))


def _minimax_tau(windows, k, lo, hi):
    """Gate time in [lo, hi] minimizing the worst normalized center mismatch.

    In x = 1 / tau each mismatch |c_p - 4 pi k_p x| / h_p is a V, so the
    maximum is piecewise linear and its minimum sits at a zero of one V or a
    crossing of two; evaluating those candidates is exact.
    """
    c = windows.centers
    h = 0.5 * (windows.omega_max - windows.omega_min)
    slope = FOUR_PI * np.asarray(k, float) / h
    icpt = c / h
    cand = [1.0 / lo, 1.0 / hi]
    cand += list(icpt / slope)
    n = len(c)
    for p in range(n):
        for q in range(p + 1, n):
            for sign in (1.0, -1.0):
                den = slope[p] - sign * slope[q]
                if den != 0.0:
                    cand.append((icpt[p] - sign * icpt[q]) / den)
    cand = [x for x in cand if 1.0 / hi <= x <= 1.0 / lo]
    best = min(cand, key=lambda x: (_spread(windows, x, k), x))
    return 1.0 / best


def search_condition1(windows: FrequencyWindow, top_m: int = 5,
                      grid_points: int = 10_000) -> list[CommensurateSolution]:
    """Gate times and integers k_p with omega_p tau = 4 pi k_p reachable inside the windows.

    A uniform tau grid proposes integer assignments (nearest k_p to the window
    center); each distinct assignment is then refined by minimizing the worst
    normalized center mismatch over its tau bracket, which drives the
    window-projected residual max|dk_p| to its minimum and, when that minimum is
    a plateau at zero, centers tau on it.
    """
    taus = np.linspace(windows.tau_min, windows.tau_max, grid_points)
    ks = np.rint(windows.centers[None, :] * taus[:, None] / FOUR_PI).astype(int)
    brackets: dict[tuple, list] = {}
    for tau, k in zip(taus, ks):
        if np.any(k < 1):
            continue
        key = tuple(int(x) for x in k)
        if key in brackets:
            brackets[key][1] = tau
        else:
            brackets[key] = [tau, tau]
    step = taus[1] - taus[0]
    found = []
    for key, (lo, hi) in brackets.items():
        lo = max(windows.tau_min, lo - step)
        hi = min(windows.tau_max, hi + step)
        k = np.array(key)
        tau = _minimax_tau(windows, k, lo, hi)
        res = float(np.max(np.abs(_projected_offsets(windows, tau, k))))
        if res < 0.5:
            found.append(CommensurateSolution(tau, key, res))
    if not found:
        raise InfeasibleError("no commensurate assignment with residual < 0.5")
    found.sort(key=lambda s: (s.residual, s.tau))
    return found[:top_m]


def design_gate(spectrum, i: int, j: int, tau: float, l: int | None = None,
                parity=None, k=None, theta_target: float = math.pi / 2, nbar=None,
                alpha_budget: float = 1e-4, l_max: int | None = None) -> gk.GateDesign:
    """Select (or take) a harmonic, calibrate the amplitude and evaluate alpha.

    ``k`` defaults to the nearest commensurate integers of the spectrum; the
    remaining offsets are the static engineering error.
    """
    k_near, dk = gk.assign_k(spectrum.frequencies, tau)
    if k is None:
        k = k_near
    else:
        k = np.asarray(k, int)
        dk = gk.commensurate_offsets(spectrum.frequencies, tau, k)
    if l is None:
        l = select_l(scan_l(spectrum, i, j, k, tau, l_max), parity)
    pulse = calibrate_omega(spectrum, i, j, k, tau, l, theta_target)
    chi = gk.chi_analytic(spectrum, i, j, k, pulse)
    alpha = gk.alpha_factored(spectrum, i, j, k, pulse, dk, nbar)
    n = spectrum.mode_count
    nb = np.broadcast_to(np.asarray(gk.DEFAULT_NBAR if nbar is None else nbar, float), (n,))
    return gk.GateDesign((i, j), pulse, k, dk, chi, alpha, alpha_budget, spectrum, nb.copy())


def sweep_common_shift(design: gk.GateDesign, shift_range, steps: int,
                       shifts=None) -> SweepResult:
    """alpha versus a common angular shift d_omega of every mode frequency.

    Lamb-Dicke parameters are held at their design values; only the offsets
    dk_p = (omega_p + d_omega) tau / 4 pi - k_p change.
    """
    if shifts is None:
        if steps < 2:
            raise ValueError("steps must be >= 2")
        shifts = np.linspace(shift_range[0], shift_range[1], steps)
    shifts = np.asarray(shifts, float)
    tau = design.pulse.tau
    i, j = design.ion_pair
    alphas = np.array([
        gk.alpha_factored(design.spectrum, i, j, design.k_indices, design.pulse,
                          design.delta_k + d * tau / FOUR_PI, design.nbar)
        for d in shifts
    ])
    return SweepResult(("delta_omega", "alpha"), np.column_stack([shifts, alphas]),
                       {"l": design.pulse.l})


def delta_k_budget(designs, epsilon: float) -> dict:
    """Per-mode |dk| tolerance for each design (keyed by harmonic l)."""
    if isinstance(designs, gk.GateDesign):
        designs = [designs]
    return {d.pulse.l: gk.budget_to_tolerance(d, epsilon) for d in designs}
