"""Randomized cross-checks of every closed form against the quadrature oracle."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import gatekernel as gk
from . import modes, oracle
from .pulse import PulseSpec


@dataclass
class Check:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    samples: int

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.max_error = float(self.max_error)

    def as_dict(self):
        d = asdict(self)
        d["passed"] = bool(d["passed"])
        d["max_error"] = float(d["max_error"])
        return d


def random_spectrum(rng, n_modes, k, tau):
    """Random orthonormal participation and Lamb-Dicke values on commensurate frequencies."""
    q, _ = np.linalg.qr(rng.normal(size=(n_modes, n_modes)))
    w = 4.0 * math.pi * np.asarray(k, float) / tau
    eta = q * rng.uniform(0.02, 0.12, size=(n_modes, 1))
    return modes.ModeSpectrum(w, q, eta)


def random_instance(rng, resonant=False, k_max=300):
    """(spectrum, k, pulse) with N <= 5 modes, k_p <= k_max, l <= 2 max k + 20."""
    n = int(rng.integers(2, 6))
    k = np.sort(rng.choice(np.arange(1, k_max + 1), size=n, replace=False))
    if resonant:
        l = int(2 * k[rng.integers(n)])
    else:
        l = int(rng.integers(1, 2 * k.max() + 21))
    tau = float(rng.uniform(20e-6, 200e-6))
    spec = random_spectrum(rng, n, k, tau)
    return spec, k, PulseSpec(l, float(rng.uniform(0.5, 2.0)) / tau, tau)


def check_chi(rng, instances, chi_error=0.0, tol=1e-6):
    worst = 0.0
    for n in range(instances):
        spec, k, pulse = random_instance(rng, resonant=(n % 4 == 3))
        ref = oracle.chi_oracle(spec, 0, 1, pulse)
        val = gk.chi_analytic(spec, 0, 1, k, pulse) * (1.0 + chi_error)
        worst = max(worst, abs(val - ref) / abs(ref))
    return Check("chi_analytic_vs_oracle", worst < tol, worst, tol, instances)


def check_factorization(rng, instances, tol=1e-10):
    worst = 0.0
    for _ in range(instances):
        l = int(rng.integers(1, 400))
        k = int(rng.integers(1, 300))
        dk = float(rng.uniform(0.01, 0.45)) * rng.choice([-1, 1])
        cycles = 2.0 * (k + dk)
        full, _ = oracle.oscillatory_integral(l, None, (0.0, 1.0), cycles=cycles)
        half, _ = oracle.oscillatory_integral(l, None, (0.0, 0.5), cycles=cycles)
        fact = -np.expm1(2j * math.pi * dk) * half
        worst = max(worst, abs(full - fact) / abs(full))
    return Check("half_gate_factorization", worst < tol, worst, tol, instances)


def check_alpha(rng, instances, tol=1e-9):
    worst = 0.0
    for _ in range(instances):
        spec, k, pulse = random_instance(rng)
        dk = rng.uniform(-0.3, 0.3, size=len(k))
        w = 4.0 * math.pi * (k + dk) / pulse.tau
        nbar = rng.uniform(0.0, 1.0, size=len(k))
        ref = oracle.alpha_oracle(spec, 0, 1, pulse, nbar, frequencies=w)
        val = gk.alpha_factored(spec, 0, 1, k, pulse, dk, nbar)
        worst = max(worst, abs(val - ref) / ref)
        closed = gk.alpha_closed_form(spec, 0, 1, k, pulse, dk, nbar)
        worst = max(worst, abs(closed - val) / val)
    return Check("alpha_closed_forms_vs_oracle", worst < tol, worst, tol, instances)


def check_half_gate(designs, tol=1e-9):
    worst = 0.0
    for d in designs:
        i, j = d.ion_pair
        first, second = gk.half_gate_chi(d.spectrum, i, j, d.pulse, k=d.k_indices)
        worst = max(worst, abs(first - d.chi / 2), abs(second - d.chi / 2))
    return Check("half_gate_identity", worst < tol, worst, tol, len(designs))


def check_modes(tol=1e-8):
    cfg = modes.ChainConfig.from_frequencies(3, 2 * math.pi * 0.5e6, 2 * math.pi * 3e6)
    spec = modes.chain_modes(cfg)
    err = float(np.max(np.abs(spec.participation - modes.uniform_participation(3))))
    return Check("uniform_three_ion_participation", err < tol, err, tol, 1)


def run_suite(seed: int, instances: int = 200, designs=(), chi_error: float = 0.0) -> dict:
    rng = np.random.default_rng(seed)
    checks = [
        check_chi(rng, instances, chi_error),
        check_factorization(rng, max(instances // 2, 1)),
        check_alpha(rng, max(instances // 4, 1)),
        check_modes(),
    ]
    if designs:
        checks.append(check_half_gate(designs))
    return {
        "seed": seed,
        "instances": instances,
        "passed": bool(all(c.passed for c in checks)),
        "checks": [c.as_dict() for c in checks],
    }
