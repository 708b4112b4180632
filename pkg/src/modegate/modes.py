"""Equilibrium positions, transverse curvature matrix and normal modes of a linear ion chain.

The transverse potential of a chain is modeled as

    U = 1/2 sum_i c_i x_i^2 + 1/2 sum_ij x_i C_ij x_j

where ``c_i`` is the per-ion pseudopotential plus static curvature and ``C`` the
Coulomb Hessian evaluated at the axial equilibrium.  Only the transverse block is
modeled; the axial confinement enters through the equilibrium spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import least_squares

from .constants import (
    COULOMB_CONSTANT,
    DEFAULT_COUPLING_WAVENUMBER,
    DEFAULT_NBAR,
    HBAR,
    YB171_MASS,
)
from .errors import (
    ConfigError,
    DegenerateGeometryError,
    InfeasibleError,
    InstabilityError,
    SolverError,
)


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ChainConfig:
    """Physical scenario for an N-ion chain.

    Curvatures are spring constants in N/m (``m * omega**2`` for a single ion).
    """

    ion_count: int
    axial_curvature: float
    transverse_curvature_per_ion: Sequence[float]
    ion_mass: float = YB171_MASS
    coupling_wavenumber: float = DEFAULT_COUPLING_WAVENUMBER
    nbar_per_mode: Sequence[float] | None = None
    initial_phases: Sequence[float] | None = None

    def __post_init__(self):
        n = self.ion_count
        if not isinstance(n, (int, np.integer)) or n < 2:
            raise ConfigError(f"ion_count must be an integer >= 2, got {n!r}")
        curv = tuple(float(c) for c in self.transverse_curvature_per_ion)
        if len(curv) != n:
            raise ConfigError(
                f"expected {n} transverse curvatures, got {len(curv)}"
            )
        if not all(math.isfinite(c) for c in curv) or not math.isfinite(self.axial_curvature):
            raise ConfigError("curvatures must be finite")
        if not (self.ion_mass > 0 and math.isfinite(self.ion_mass)):
            raise ConfigError("ion_mass must be positive")
        nbar = (DEFAULT_NBAR,) * n if self.nbar_per_mode is None else tuple(
            float(x) for x in self.nbar_per_mode
        )
        if len(nbar) != n or any(x < 0 for x in nbar):
            raise ConfigError("nbar_per_mode needs ion_count non-negative values")
        phases = (0.0,) * n if self.initial_phases is None else tuple(
            float(x) for x in self.initial_phases
        )
        if len(phases) != n:
            raise ConfigError("initial_phases needs ion_count values")
        object.__setattr__(self, "ion_count", int(n))
        object.__setattr__(self, "transverse_curvature_per_ion", curv)
        object.__setattr__(self, "nbar_per_mode", nbar)
        object.__setattr__(self, "initial_phases", phases)

    @classmethod
    def from_frequencies(cls, ion_count, axial_frequency, transverse_frequencies,
                         ion_mass=YB171_MASS, **kwargs) -> ChainConfig:
        """Build a config from angular trap frequencies (rad/s).

        ``transverse_frequencies`` is either a scalar (uniform trap) or one
        single-ion frequency per ion.
        """
        wt = np.broadcast_to(np.asarray(transverse_frequencies, float), (ion_count,))
        return cls(
            ion_count=ion_count,
            axial_curvature=ion_mass * axial_frequency**2,
            transverse_curvature_per_ion=tuple(ion_mass * wt**2),
            ion_mass=ion_mass,
            **kwargs,
        )

    def replace(self, **changes) -> ChainConfig:
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class EquilibriumChain:
    positions: np.ndarray
    gradient_norm: float
    iterations: int = 0


@dataclass(frozen=True)
class ModeSpectrum:
    """Transverse normal modes sorted by ascending angular frequency.

    ``participation[p, i]`` and ``lamb_dicke[p, i]`` are indexed mode-first.
    """

    frequencies: np.ndarray
    participation: np.ndarray
    lamb_dicke: np.ndarray
    eigenvalues: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("frequencies", "participation", "lamb_dicke"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        if self.eigenvalues is not None:
            object.__setattr__(self, "eigenvalues", _frozen_array(self.eigenvalues))
        n = len(self.frequencies)
        if self.participation.shape != (n, n) or self.lamb_dicke.shape != (n, n):
            raise ConfigError("participation and lamb_dicke must be N x N")
        if np.any(self.frequencies <= 0):
            raise InstabilityError("mode frequencies must be positive",
                                   int(np.argmin(self.frequencies)))

    @property
    def mode_count(self) -> int:
        return len(self.frequencies)

    @classmethod
    def from_participation(cls, frequencies, participation, ion_mass=YB171_MASS,
                           coupling_wavenumber=DEFAULT_COUPLING_WAVENUMBER,
                           reference_frequency=None) -> ModeSpectrum:
        """Attach Lamb-Dicke parameters to given frequencies and participation vectors.

        With ``reference_frequency`` set, every mode uses the zero-point spread
        at that single frequency (a mode-independent Lamb-Dicke scale) instead
        of its own.
        """
        w = np.asarray(frequencies, float)
        nu = np.asarray(participation, float)
        w_eta = w if reference_frequency is None else np.full_like(w, reference_frequency)
        return cls(w, nu, lamb_dicke_matrix(w_eta, nu, ion_mass, coupling_wavenumber))

    def pair_product(self, i: int, j: int) -> np.ndarray:
        """eta_p^i * eta_p^j for every mode p."""
        self._check_pair(i, j)
        return self.lamb_dicke[:, i] * self.lamb_dicke[:, j]

    def pair_square_sum(self, i: int, j: int) -> np.ndarray:
        """(eta_p^i)^2 + (eta_p^j)^2 for every mode p."""
        self._check_pair(i, j)
        return self.lamb_dicke[:, i] ** 2 + self.lamb_dicke[:, j] ** 2

    def _check_pair(self, i, j):
        n = self.lamb_dicke.shape[1]
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ConfigError(f"invalid ion pair ({i}, {j}) for {n} ions")


def lamb_dicke_matrix(frequencies, participation, ion_mass, coupling_wavenumber):
    w = np.asarray(frequencies, float)
    scale = coupling_wavenumber * np.sqrt(HBAR / (2.0 * ion_mass * w))
    return np.asarray(participation, float) * scale[:, None]


def uniform_participation(ion_count: int) -> np.ndarray:
    """Transverse participation of a uniform 3-ion chain, rows ordered zigzag, tilt, COM."""
    if ion_count != 3:
        raise ConfigError("closed-form participation is only tabulated for 3 ions")
    return np.array([
        np.array([1.0, -2.0, 1.0]) / math.sqrt(6.0),
        np.array([1.0, 0.0, -1.0]) / math.sqrt(2.0),
        np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0),
    ])


# --- axial equilibrium -----------------------------------------------------

def length_scale(axial_curvature: float) -> float:
    """Characteristic length (q^2 / 4 pi eps0 kappa_z)^(1/3), in m."""
    return (COULOMB_CONSTANT / axial_curvature) ** (1.0 / 3.0)


def _scaled_force(u):
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    return u - np.sum(np.sign(diff) / diff**2, axis=1)


def _scaled_hessian(u):
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    inv3 = 2.0 / np.abs(diff) ** 3
    hess = -inv3
    np.fill_diagonal(hess, 1.0 + inv3.sum(axis=1))
    return hess


def scaled_equilibrium(ion_count: int, tol: float = 1e-12, max_iter: int = 200):
    """Equilibrium in units of the characteristic length.

    Damped Newton on the force balance u_i = sum_j sgn(u_i - u_j) / (u_i - u_j)^2.
    Returns ``(positions, residual, iterations)``.
    """
    n = ion_count
    spacing = 2.018 * n ** (-0.559) if n > 2 else 2 ** (1 / 3)
    u = (np.arange(n) - (n - 1) / 2.0) * spacing
    force = _scaled_force(u)
    res = np.max(np.abs(force))
    it = 0
    while res >= tol:
        if it >= max_iter:
            raise SolverError(f"equilibrium did not converge in {max_iter} iterations", res)
        step = np.linalg.solve(_scaled_hessian(u), -force)
        damping = 1.0
        while True:
            trial = u + damping * step
            ordered = np.all(np.diff(trial) > 0)
            if ordered:
                trial_force = _scaled_force(trial)
                trial_res = np.max(np.abs(trial_force))
                if trial_res < res or damping < 1e-6:
                    break
            damping *= 0.5
            if damping < 1e-10:
                raise SolverError("line search failed in equilibrium solver", res)
        u, force, res = trial, trial_force, trial_res
        it += 1
    # restore exact mirror symmetry lost to rounding
    u = 0.5 * (u - u[::-1])
    return u, float(np.max(np.abs(_scaled_force(u)))), it


def solve_equilibrium(config: ChainConfig) -> EquilibriumChain:
    """Axial equilibrium positions (m), centered on the origin."""
    if not config.axial_curvature > 0:
        raise ConfigError("axial_curvature must be positive")
    u, res, it = scaled_equilibrium(config.ion_count)
    return EquilibriumChain(_frozen_array(u * length_scale(config.axial_curvature)), res, it)


def axial_curvature_for_spacing(ion_count: int, spacing: float) -> float:
    """Axial curvature giving a mean nearest-neighbour spacing ``spacing`` (m).

    Spacing scales as curvature^(-1/3), so this is exact rather than a search.
    """
    if spacing <= 0:
        raise ConfigError("spacing must be positive")
    u, _, _ = scaled_equilibrium(ion_count)
    mean_gap = (u[-1] - u[0]) / (ion_count - 1)
    return COULOMB_CONSTANT * (mean_gap / spacing) ** 3


# --- transverse curvature matrix -------------------------------------------

def build_k_matrix(config: ChainConfig, eq: EquilibriumChain) -> np.ndarray:
    """Transverse curvature matrix K = P + A + C in N/m."""
    x = np.asarray(eq.positions, float)
    if len(x) != config.ion_count:
        raise ConfigError("equilibrium does not match the config ion count")
    dist = np.abs(x[:, None] - x[None, :])
    off = ~np.eye(len(x), dtype=bool)
    if np.any(dist[off] == 0):
        raise DegenerateGeometryError("coincident ion positions")
    kappa = np.zeros_like(dist)
    kappa[off] = COULOMB_CONSTANT / dist[off] ** 3
    k = kappa.copy()
    np.fill_diagonal(k, np.asarray(config.transverse_curvature_per_ion) - kappa.sum(axis=1))
    return k


# --- eigen-solver ------------------------------------------------------------

def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalization of a real symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors in the columns,
    unsorted.  Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol`` times the norm of the diagonal.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError("matrix must be square")
    if not np.array_equal(a, a.T):
        raise ConfigError("matrix must be symmetric")
    n = a.shape[0]
    v = np.eye(n)

    mask = ~np.eye(n, dtype=bool)

    def off_norm(m):
        return float(np.linalg.norm(m[mask]))

    for _ in range(max_sweeps):
        if off_norm(a) <= tol * np.linalg.norm(np.diag(a)):
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                # A <- J^T A J with the (p, q) rotation
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise SolverError("Jacobi eigensolver did not converge", off_norm(a))


def _fix_sign(vec):
    # first non-negligible component positive
    big = np.abs(vec) > 1e-8 * np.max(np.abs(vec))
    first = np.argmax(big)
    return -vec if vec[first] < 0 else vec


def solve_modes(config: ChainConfig, k) -> ModeSpectrum:
    """Normal modes of the transverse curvature matrix ``k``."""
    lam, vecs = jacobi_eigh(k)
    scale = np.max(np.abs(lam))
    rows = [_fix_sign(vecs[:, p]) for p in range(len(lam))]
    # ascending eigenvalue; near-degenerate groups ordered lexicographically
    order = sorted(range(len(lam)), key=lambda p: lam[p])
    grouped = []
    for p in order:
        if grouped and abs(lam[p] - lam[grouped[-1][0]]) <= 1e-12 * scale:
            grouped[-1].append(p)
        else:
            grouped.append([p])
    order = [p for g in grouped for p in sorted(g, key=lambda q: tuple(rows[q]))]
    lam = lam[order]
    nu = np.array([rows[p] for p in order])
    bad = np.flatnonzero(lam <= 0)
    if bad.size:
        p = int(bad[0])
        raise InstabilityError(f"mode {p} has non-positive curvature {lam[p]:.3e} N/m", p)
    w = np.sqrt(lam / config.ion_mass)
    eta = lamb_dicke_matrix(w, nu, config.ion_mass, config.coupling_wavenumber)
    return ModeSpectrum(w, nu, eta, eigenvalues=lam)


def chain_modes(config: ChainConfig) -> ModeSpectrum:
    """Equilibrium, K matrix and modes in one call."""
    eq = solve_equilibrium(config)
    return solve_modes(config, build_k_matrix(config, eq))


# --- curvature inversion -------------------------------------------------------

class CurvatureFit(NamedTuple):
    config: ChainConfig
    frequencies: np.ndarray
    residual: float  # max relative frequency mismatch
    exact: bool


def invert_curvatures_for_frequencies(target_frequencies, config: ChainConfig,
                                      rtol: float = 1e-6) -> CurvatureFit:
    """Fit edge and center transverse curvatures of a 3-ion chain to target mode frequencies.

    With two knobs and three targets an exact match is generally impossible;
    the least-squares optimum is returned together with its residual.  The axial
    curvature of ``config`` (and hence the spacing) is kept.
    """
    target = np.asarray(target_frequencies, float)
    if config.ion_count != 3 or target.shape != (3,):
        raise ConfigError("curvature inversion supports 3-ion chains only")
    if np.any(target <= 0) or np.any(np.diff(target) <= 0):
        raise InfeasibleError(
            "targets must be positive and ascending (zigzag < tilt < COM)", float("inf")
        )
    m = config.ion_mass
    eq = solve_equilibrium(config)
    coulomb = build_k_matrix(config.replace(transverse_curvature_per_ion=(0.0,) * 3), eq)
    # natural unit: COM curvature
    unit = m * target[-1] ** 2

    def freqs(x):
        k = coulomb + np.diag([x[0], x[1], x[0]]) * unit
        lam = np.linalg.eigvalsh(k)
        return np.sqrt(np.clip(lam, 0.0, None) / m), lam

    def resid(x):
        w, _ = freqs(x)
        return w / target - 1.0

    fit = least_squares(resid, x0=[1.0, 1.0], bounds=([0.01, 0.01], [100.0, 100.0]),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    w, lam = freqs(fit.x)
    residual = float(np.max(np.abs(w / target - 1.0)))
    if np.any(lam <= 0):
        raise InfeasibleError("no stable curvature assignment in search box", residual)
    edge, center = fit.x * unit
    out = config.replace(transverse_curvature_per_ion=(edge, center, edge))
    spectrum = chain_modes(out)
    return CurvatureFit(out, spectrum.frequencies, residual, residual <= rtol)
