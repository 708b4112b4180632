"""Brute-force quadrature used to cross-check every closed form.

Integrals are taken on s = t / tau with composite Gauss-Legendre panels sized to
the fastest oscillation present.  Accuracy is certified by comparing a rule with
its panel-doubled refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError
from .pulse import PulseSpec, mod2_product

NODES_PER_PANEL = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(NODES_PER_PANEL)


@dataclass(frozen=True)
class QuadratureSettings:
    points_per_oscillation: int = 24
    rel_tolerance: float = 1e-9
    max_panels: int = 1 << 16
    # absolute convergence floor in units of the window's natural scale;
    # needed where the exact value is zero
    abs_floor: float = 1e-13

    def __post_init__(self):
        if self.points_per_oscillation < 8:
            raise ValueError("points_per_oscillation must be at least 8")


DEFAULT_SETTINGS = QuadratureSettings()


def panel_count(cycles: float, width: float, settings: QuadratureSettings) -> int:
    """Panels on a window of ``width`` (in s) resolving ``cycles`` oscillations per unit s.

    Rounded up to a power of two so that panel edges on dyadic windows are exact.
    """
    nodes = settings.points_per_oscillation * max(cycles, 1.0) * width
    need = max(1, math.ceil(nodes / NODES_PER_PANEL))
    return 1 << (need - 1).bit_length()


def gauss_legendre(a: float, b: float, panels: int):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return x, w


def _split(window):
    """Sub-windows of ``window`` cut at the pulse midpoint s = 1/2."""
    a, b = window
    if a < 0.5 < b:
        return [(a, 0.5), (0.5, b)]
    return [(a, b)]


def _refine(evaluate, base_panels, settings, scale):
    """Double panels until two successive estimates agree; return (value, change)."""
    mult = 1
    prev = np.asarray(evaluate(mult))
    diff = math.inf
    while True:
        mult *= 2
        if mult * base_panels > settings.max_panels:
            raise AccuracyError("quadrature did not converge within max_panels", prev, diff)
        cur = np.asarray(evaluate(mult))
        diff = float(np.max(np.abs(cur - prev)))
        size = float(np.max(np.abs(cur)))
        if diff <= max(settings.rel_tolerance * size, settings.abs_floor * scale):
            return (cur if cur.ndim else cur[()]), diff
        prev = cur


def _window(pulse, window):
    if window is None:
        return 0.0, 1.0
    ta, tb = window
    if not (0.0 <= ta < tb <= pulse.tau):
        raise ValueError("window must satisfy 0 <= t_a < t_b <= tau")
    return ta / pulse.tau, tb / pulse.tau


def _phase(cycles: float, x):
    """cos and sin of 2 pi cycles x, with the integer part of cycles reduced exactly."""
    n = round(cycles)
    y = mod2_product(2 * n, x) + 2.0 * (cycles - n) * x
    return np.cos(math.pi * y), np.sin(math.pi * y)


def _panels(l, cycles, a, b, panels):
    """Per-panel factors of F(s) = unit_pulse(s) exp(2 pi i cycles s) on [a, b].

    With s = m + r (m the panel midpoint, r the offset from it),
    F = A_m exp(2 pi i (cycles + l) r) - B_m exp(2 pi i (cycles - l) r).
    Large phases are taken only at the midpoints, where they are reduced
    exactly; offsets are small and shared by every panel, so nodes never
    carry the rounding of a large phase.  Returns (A, B, half_width).
    """
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    first = 0.5 * (a + b) <= 0.5
    start, sign = (0.0, 1.0) if first else (0.5, -1.0)
    c, s = _phase(cycles, mid)
    carrier = c + 1j * s
    q = np.pi * mod2_product(2 * l, mid - start)
    shape = np.cos(q) + 1j * np.sin(q)
    a_m = sign * shape * carrier / 2j
    b_m = sign * np.conj(shape) * carrier / 2j
    return a_m, b_m, 0.5 * (b - a) / panels


def _offsets(l, cycles, r):
    return np.exp(2j * math.pi * (cycles + l) * r), np.exp(2j * math.pi * (cycles - l) * r)


def oscillatory_integral(l: int, phase_rate: float, window=(0.0, 1.0), phase=0.0,
                         settings: QuadratureSettings = DEFAULT_SETTINGS, cycles=None):
    """Integral of unit_pulse(s) exp(i(phase_rate s + phase)) over the window.

    ``phase_rate`` is omega * tau; alternatively pass ``cycles`` = omega tau / 2 pi
    directly.  Returns ``(value, error_estimate)``.
    """
    if cycles is None:
        cycles = phase_rate / (2 * math.pi)
    fastest = l + abs(cycles)
    pieces = _split(window)
    rot = complex(math.cos(phase), math.sin(phase))

    def evaluate(mult):
        terms = []
        for a, b in pieces:
            a_m, b_m, h = _panels(l, cycles, a, b, mult * panel_count(fastest, b - a, settings))
            pa, pb = _offsets(l, cycles, h * _GL_X)
            terms.append(a_m * (h * _GL_W @ pa) - b_m * (h * _GL_W @ pb))
        terms = np.concatenate(terms)
        return complex(math.fsum(terms.real), math.fsum(terms.imag)) * rot

    base = sum(panel_count(fastest, b - a, settings) for a, b in pieces)
    return _refine(evaluate, base, settings, scale=window[1] - window[0])


def mode_integral(pulse: PulseSpec, omega: float, t_window=None, phase=0.0,
                  settings: QuadratureSettings = DEFAULT_SETTINGS) -> complex:
    """Integral of g(t) exp(i(omega t + phase)) dt over ``t_window`` (default full gate)."""
    win = _window(pulse, t_window)
    val, _ = oscillatory_integral(pulse.l, omega * pulse.tau, win, phase, settings)
    return pulse.omega * pulse.tau * val


def _ordered_integral(l, rate, window, mult, settings):
    """Time-ordered double integral of g(s2) g(s1) sin(rate (s2 - s1)), s1 <= s2, on window.

    sin(rate (s2 - s1)) = Im(F(s2) conj(F(s1))) / (g(s2) g(s1)) with F = g exp(i rate s),
    so the result is Im of sum_outer w F(s2) conj(C(s2)), C the running integral of F:
    whole panels accumulated, plus a fresh Gauss rule on the partial panel up to
    each outer node.
    """
    cycles = rate / (2 * math.pi)
    fastest = l + abs(cycles)
    total = 0.0
    inner = 0j
    for a, b in _split(window):
        panels = mult * panel_count(fastest, b - a, settings)
        a_m, b_m, h = _panels(l, cycles, a, b, panels)
        r = h * _GL_X
        pa, pb = _offsets(l, cycles, r)
        wt = h * _GL_W
        outer = a_m[:, None] * pa - b_m[:, None] * pb
        whole = a_m * (wt @ pa) - b_m * (wt @ pb)
        before = inner + np.concatenate([[0.0], np.cumsum(whole[:-1])])
        # partial panel [-h, r_k] relative to the midpoint, same for every panel
        hp = 0.5 * (r + h)
        y = (hp - h)[:, None] + hp[:, None] * _GL_X[None, :]
        ya, yb = _offsets(l, cycles, y)
        wy = hp[:, None] * _GL_W[None, :]
        part = a_m[:, None] * np.sum(wy * ya, axis=1) - b_m[:, None] * np.sum(wy * yb, axis=1)
        cum = before[:, None] + part
        total += float(np.sum(wt * (outer * np.conj(cum)).imag))
        inner = before[-1] + whole[-1]
    return total


def chi_oracle(spectrum, i: int, j: int, pulse: PulseSpec,
               settings: QuadratureSettings | None = None, window=None,
               frequencies=None) -> float:
    """Entangling phase chi_ij by direct time-ordered quadrature over ``window`` (s)."""
    settings = settings or DEFAULT_SETTINGS
    win = _window(pulse, window)
    w = spectrum.frequencies if frequencies is None else np.asarray(frequencies, float)
    prod = spectrum.pair_product(i, j)
    if pulse.omega == 0:
        return 0.0
    rates = w * pulse.tau

    def evaluate(mult):
        return np.array([_ordered_integral(pulse.l, r, win, mult, settings) for r in rates])

    fastest = pulse.l + float(np.max(np.abs(rates))) / (2 * math.pi)
    base = sum(panel_count(fastest, b - a, settings) for a, b in _split(win))
    per_mode, _ = _refine(evaluate, base, settings, scale=(win[1] - win[0]) ** 2)
    return (pulse.omega * pulse.tau) ** 2 * float(np.sum(prod * per_mode))


def chi_cross_window(spectrum, i: int, j: int, pulse: PulseSpec, split: float,
                     settings: QuadratureSettings | None = None, frequencies=None) -> float:
    """Cross term: s1 in [0, split], s2 in [split, 1] (split given in seconds)."""
    settings = settings or DEFAULT_SETTINGS
    w = spectrum.frequencies if frequencies is None else np.asarray(frequencies, float)
    sp = split / pulse.tau
    out = 0.0
    for prod, rate in zip(spectrum.pair_product(i, j), w * pulse.tau):
        early, _ = oscillatory_integral(pulse.l, rate, (0.0, sp), 0.0, settings)
        late, _ = oscillatory_integral(pulse.l, rate, (sp, 1.0), 0.0, settings)
        # int g2 g1 sin(r s2 - r s1) = Im(late * conj(early))
        out += prod * (late * np.conj(early)).imag
    return (pulse.omega * pulse.tau) ** 2 * out


def alpha_oracle(spectrum, i: int, j: int, pulse: PulseSpec, nbar=None,
                 settings: QuadratureSettings | None = None, frequencies=None,
                 phases=None) -> float:
    """Residual coupling alpha with every mode integral by quadrature."""
    from .gatekernel import _nbar

    settings = settings or DEFAULT_SETTINGS
    w = spectrum.frequencies if frequencies is None else np.asarray(frequencies, float)
    if np.any(w <= 0):
        raise ValueError("mode frequencies must be positive")
    n = spectrum.mode_count
    ph = np.zeros(n) if phases is None else np.broadcast_to(np.asarray(phases, float), (n,))
    thermal = 2.0 * _nbar(nbar, n) + 1.0
    mods = np.array([abs(mode_integral(pulse, wp, None, php, settings)) ** 2
                     for wp, php in zip(w, ph)])
    return 0.8 * float(np.sum(thermal * spectrum.pair_square_sum(i, j) * mods))
