"""Two-segment sinusoidal gate pulses and power-optimal harmonic selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCouplingError, PulseDomainError, SelectionError


@dataclass(frozen=True)
class PulseSpec:
    """g(t) = omega * sin(2 l pi t / tau) on the first half, sign-flipped copy on the second.

    ``chi_sign`` records the sign of the entangling phase produced by the
    calibration; it is gate metadata and does not enter g(t).
    """

    l: int
    omega: float
    tau: float
    chi_sign: int = field(default=1, compare=False)

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 1:
            raise ValueError(f"harmonic l must be a positive integer, got {self.l!r}")
        if not self.tau > 0:
            raise ValueError("gate time must be positive")
        object.__setattr__(self, "l", int(self.l))

    @property
    def parity(self) -> int:
        return self.l % 2

    @property
    def is_odd(self) -> bool:
        return self.l % 2 == 1

    def with_omega(self, omega: float) -> PulseSpec:
        return PulseSpec(self.l, omega, self.tau, self.chi_sign)


_SPLIT = 2.0**36


def mod2_product(n: int, x):
    """(n * x) mod 2 for integer |n| < 2**17 and |x| <= 1, without rounding the product.

    x is split into a 36-bit head, whose product with n is exact, and a tiny tail.
    Keeps trig arguments accurate when n * x spans thousands of radians.
    """
    x = np.asarray(x, dtype=float)
    head = np.round(x * _SPLIT) / _SPLIT
    return np.mod(np.mod(n * head, 2.0) + n * (x - head), 2.0)


def sinpi(r):
    """sin(pi r) for r already reduced to [0, 2), with exact zeros at 0 and 1."""
    r = np.asarray(r, dtype=float)
    return np.where((r == 0.0) | (r == 1.0), 0.0, np.sin(math.pi * r))


def unit_pulse(l: int, s):
    """Dimensionless pulse shape on s = t / tau in [0, 1]."""
    s = np.asarray(s, dtype=float)
    first = s <= 0.5
    arg = np.where(first, s, s - 0.5)
    return np.where(first, 1.0, -1.0) * sinpi(mod2_product(2 * l, arg))


def eval_pulse(spec: PulseSpec, t):
    """Pulse amplitude at time(s) ``t`` in seconds."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > spec.tau):
        raise PulseDomainError(f"t outside [0, {spec.tau}]")
    out = spec.omega * unit_pulse(spec.l, t_arr / spec.tau)
    return float(out) if out.ndim == 0 else out


def one_sided_derivatives(spec: PulseSpec, t0: float, h: float):
    """Fourth-order backward and forward difference estimates of g'(t0)."""
    c = np.array([25.0, -48.0, 36.0, -16.0, 3.0]) / 12.0
    steps = np.arange(5) * h
    left = eval_pulse(spec, t0 - steps)
    right = eval_pulse(spec, t0 + steps)
    return float(c @ left) / h, -float(c @ right) / h


@dataclass(frozen=True)
class SweepResult:
    """Tabulated sweep: named columns over numeric rows."""

    columns: tuple
    rows: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.columns):
            raise ValueError("rows must be a 2-D array matching columns")
        rows.flags.writeable = False
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", rows)

    def __len__(self):
        return self.rows.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


def default_l_max(k) -> int:
    return 2 * int(np.max(k)) + 20


def scan_l(spectrum, i: int, j: int, k, tau: float, l_max: int | None = None) -> SweepResult:
    """|chi_ij / (Omega tau)^2| for every harmonic 1..l_max.

    The normalized entangling phase does not depend on ``tau``; it is accepted
    so the call mirrors the other design steps.
    """
    from .gatekernel import chi_unit

    if i == j:
        raise ValueError("ion pair must be two distinct ions")
    k = np.asarray(k)
    if k.shape != (spectrum.mode_count,) or np.any(k < 1) or np.any(k != np.round(k)):
        raise ValueError("k must hold one positive integer per mode")
    if l_max is None:
        l_max = default_l_max(k)
    ls = np.arange(1, l_max + 1)
    prod = spectrum.pair_product(i, j)
    vals = np.array([abs(chi_unit(prod, k, int(l))) for l in ls])
    marker = np.isin(ls, 2 * k).astype(float)
    return SweepResult(("l", "parity", "value", "resonance"),
                       np.column_stack([ls, ls % 2, vals, marker]),
                       {"ion_pair": (i, j), "tau": tau})


def select_l(scan: SweepResult, parity: int | str | None = None) -> int:
    """Harmonic maximizing |chi / (Omega tau)^2|; ties go to the smaller l."""
    ls = scan.column("l")
    vals = scan.column("value")
    if parity is not None:
        want = {"odd": 1, "even": 0}.get(parity, parity)
        mask = scan.column("parity") == want
        ls, vals = ls[mask], vals[mask]
    if len(ls) == 0:
        raise SelectionError(f"no harmonic with parity {parity!r} in scan")
    # rows are ascending in l, argmax keeps the first maximum
    return int(ls[int(np.argmax(vals))])


def calibrate_omega(spectrum, i: int, j: int, k, tau: float, l: int,
                    theta_target: float = math.pi / 2) -> PulseSpec:
    """Pulse amplitude giving |chi_ij| = theta_target / 4."""
    from .gatekernel import chi_unit

    unit = chi_unit(spectrum.pair_product(i, j), np.asarray(k), l) * tau**2
    if unit == 0.0:
        raise DegenerateCouplingError(f"ions ({i}, {j}) do not couple at l = {l}")
    sign = 1 if unit > 0 else -1
    if theta_target < 0:
        theta_target, sign = -theta_target, -sign
    omega = math.sqrt(theta_target / 4.0 / abs(unit))
    return PulseSpec(l, omega, tau, sign)
