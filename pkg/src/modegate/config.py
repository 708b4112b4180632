"""Run configuration: TOML parsing, unit conversion and validation.

Frequencies are given in MHz (kHz for small shifts and widths), times in
microseconds, lengths in micrometres.  Everything is converted to SI angular
units once, here.  Unknown sections or keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import modes
from .constants import ATOMIC_MASS, DEFAULT_COUPLING_WAVENUMBER, DEFAULT_NBAR, YB171_MASS_U
from .errors import ConfigError

TWO_PI = 2.0 * math.pi
MODE_SOURCES = ("ideal", "quoted", "solved")
SCALINGS = ("per_mode", "common")


@dataclass(frozen=True)
class ChainSection:
    ion_count: int = 3
    mass_u: float = YB171_MASS_U
    spacing_um: float | None = None
    axial_frequency_mhz: float | None = None
    transverse_frequencies_mhz: list | None = None
    mode_frequencies_mhz: list | None = None
    modes: str = "solved"
    lamb_dicke_scaling: str = "per_mode"
    coupling_wavenumber_per_um: float = DEFAULT_COUPLING_WAVENUMBER * 1e-6
    nbar: float | list = DEFAULT_NBAR
    phases: list | None = None


@dataclass(frozen=True)
class GateSection:
    ion_i: int = 0
    ion_j: int = 1
    theta_over_pi: float = 0.5
    parity: str = "both"
    tau_us: float | None = None
    k: list | None = None
    l_max: int | None = None
    alpha_budget: float = 1e-4


@dataclass(frozen=True)
class EngineeringSection:
    window_centers_mhz: list | None = None
    window_halfwidth_khz: float = 0.5
    tau_min_us: float = 60.0
    tau_max_us: float = 80.0
    top_m: int = 5
    grid_points: int = 10_000


@dataclass(frozen=True)
class SweepSection:
    delta_omega_min_khz: float = -1.0
    delta_omega_max_khz: float = 1.0
    steps: int = 201


@dataclass(frozen=True)
class Fig4Section:
    samples: int = 10_001


@dataclass(frozen=True)
class VerifySection:
    seed: int = 20210601
    instances: int = 200


@dataclass(frozen=True)
class OutputSection:
    format: str = "csv"
    precision: int = 12
    path: str | None = None


SECTIONS = {
    "chain": ChainSection,
    "gate": GateSection,
    "engineering": EngineeringSection,
    "sweep": SweepSection,
    "fig4": Fig4Section,
    "verify": VerifySection,
    "output": OutputSection,
}


@dataclass(frozen=True)
class RunConfig:
    chain: ChainSection = field(default_factory=ChainSection)
    gate: GateSection = field(default_factory=GateSection)
    engineering: EngineeringSection = field(default_factory=EngineeringSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    fig4: Fig4Section = field(default_factory=Fig4Section)
    verify: VerifySection = field(default_factory=VerifySection)
    output: OutputSection = field(default_factory=OutputSection)

    # --- derived SI quantities ---------------------------------------------

    @property
    def ion_mass(self) -> float:
        return self.chain.mass_u * ATOMIC_MASS

    @property
    def coupling_wavenumber(self) -> float:
        return self.chain.coupling_wavenumber_per_um * 1e6

    @property
    def tau(self) -> float | None:
        return None if self.gate.tau_us is None else self.gate.tau_us * 1e-6

    @property
    def theta_target(self) -> float:
        return self.gate.theta_over_pi * math.pi

    @property
    def nbar(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.chain.nbar, float), (self.chain.ion_count,)).copy()

    def require_tau(self) -> float:
        if self.tau is None:
            raise ConfigError("gate.tau_us is required for this command")
        return self.tau


def _build(cls, name, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    allowed = set(cls.__dataclass_fields__)
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def parse_config(data: dict) -> RunConfig:
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    cfg = RunConfig(**{name: _build(cls, name, data.get(name, {})) for name, cls in SECTIONS.items()})
    validate(cfg)
    return cfg


def preset_names() -> list[str]:
    base = resources.files("modegate") / "presets"
    return sorted(p.name[:-5] for p in base.iterdir() if p.name.endswith(".toml"))


def load_config(path_or_preset) -> RunConfig:
    """Load a TOML file, or a bundled preset by name (e.g. ``paper3ion``)."""
    if path_or_preset is None:
        return parse_config({})
    path = Path(path_or_preset)
    try:
        if path.exists():
            text = path.read_text()
        elif str(path_or_preset) in preset_names():
            text = (resources.files("modegate") / "presets" / f"{path_or_preset}.toml").read_text()
        else:
            raise ConfigError(f"no config file or preset named {path_or_preset!r}")
        return parse_config(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def validate(cfg: RunConfig) -> None:
    ch = cfg.chain
    n = ch.ion_count
    if not isinstance(n, int) or n < 2:
        raise ConfigError("chain.ion_count must be an integer >= 2")
    if ch.modes not in MODE_SOURCES:
        raise ConfigError(f"chain.modes must be one of {MODE_SOURCES}")
    if ch.lamb_dicke_scaling not in SCALINGS:
        raise ConfigError(f"chain.lamb_dicke_scaling must be one of {SCALINGS}")
    if not ch.mass_u > 0:
        raise ConfigError("chain.mass_u must be positive")
    if np.any(cfg.nbar < 0):
        raise ConfigError("chain.nbar must be non-negative")
    if ch.mode_frequencies_mhz is not None and len(ch.mode_frequencies_mhz) != n:
        raise ConfigError("chain.mode_frequencies_mhz needs ion_count entries")
    if ch.modes in ("ideal", "quoted") and n != 3:
        raise ConfigError("ideal/quoted participation is tabulated for 3 ions only")
    if ch.modes == "quoted" and ch.mode_frequencies_mhz is None:
        raise ConfigError("chain.modes = 'quoted' needs chain.mode_frequencies_mhz")
    if ch.modes == "ideal" and (cfg.gate.k is None or cfg.gate.tau_us is None):
        raise ConfigError("chain.modes = 'ideal' needs gate.k and gate.tau_us")
    g = cfg.gate
    for name in ("ion_i", "ion_j"):
        v = getattr(g, name)
        if not isinstance(v, int) or not 0 <= v < n:
            raise ConfigError(f"gate.{name} must be an ion index below {n}")
    if g.ion_i == g.ion_j:
        raise ConfigError("gate.ion_i and gate.ion_j must differ")
    if g.parity not in ("odd", "even", "both"):
        raise ConfigError("gate.parity must be odd, even or both")
    if g.tau_us is not None and not g.tau_us > 0:
        raise ConfigError("gate.tau_us must be positive")
    if g.k is not None and (len(g.k) != n or any(int(x) != x or x < 1 for x in g.k)):
        raise ConfigError("gate.k needs ion_count positive integers")
    if cfg.output.format not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")
    if not isinstance(cfg.output.precision, int) or not 6 <= cfg.output.precision <= 17:
        raise ConfigError("output.precision must be an integer in [6, 17]")
    if cfg.sweep.steps < 2:
        raise ConfigError("sweep.steps must be >= 2")
    if cfg.fig4.samples < 10_000:
        raise ConfigError("fig4.samples must be >= 10000")


# --- spectrum construction -------------------------------------------------

def chain_config(cfg: RunConfig) -> modes.ChainConfig:
    """Trap model of the [chain] section (transverse curvatures may be placeholders)."""
    ch = cfg.chain
    m = cfg.ion_mass
    n = ch.ion_count
    if ch.spacing_um is not None:
        kz = modes.axial_curvature_for_spacing(n, ch.spacing_um * 1e-6)
    elif ch.axial_frequency_mhz is not None:
        kz = m * (TWO_PI * ch.axial_frequency_mhz * 1e6) ** 2
    else:
        raise ConfigError("chain needs spacing_um or axial_frequency_mhz")
    if ch.transverse_frequencies_mhz is not None:
        wt = np.broadcast_to(TWO_PI * 1e6 * np.asarray(ch.transverse_frequencies_mhz, float), (n,))
        curv = tuple(m * wt**2)
    elif ch.mode_frequencies_mhz is not None:
        curv = (m * (TWO_PI * 1e6 * max(ch.mode_frequencies_mhz)) ** 2,) * n
    else:
        raise ConfigError("chain needs transverse_frequencies_mhz or mode_frequencies_mhz")
    return modes.ChainConfig(
        ion_count=n,
        axial_curvature=kz,
        transverse_curvature_per_ion=curv,
        ion_mass=m,
        coupling_wavenumber=cfg.coupling_wavenumber,
        nbar_per_mode=tuple(cfg.nbar),
        initial_phases=ch.phases,
    )


def build_spectrum(cfg: RunConfig) -> modes.ModeSpectrum:
    """Mode spectrum selected by ``chain.modes``.

    ``ideal``: commensurate frequencies 4 pi k / tau with uniform-chain participation.
    ``quoted``: the listed mode frequencies with uniform-chain participation.
    ``solved``: the trap model; with ``mode_frequencies_mhz`` (3 ions) the
    edge/center curvatures are fitted to those frequencies first.
    """
    ch = cfg.chain
    if ch.modes == "solved":
        chain = chain_config(cfg)
        if ch.mode_frequencies_mhz is not None:
            target = TWO_PI * 1e6 * np.asarray(ch.mode_frequencies_mhz, float)
            chain = modes.invert_curvatures_for_frequencies(target, chain).config
        spec = modes.chain_modes(chain)
        if ch.lamb_dicke_scaling == "per_mode":
            return spec
        return modes.ModeSpectrum.from_participation(
            spec.frequencies, spec.participation, cfg.ion_mass, cfg.coupling_wavenumber,
            reference_frequency=float(spec.frequencies[-1]))
    if ch.modes == "ideal":
        w = 4.0 * math.pi * np.asarray(cfg.gate.k, float) / cfg.require_tau()
    else:
        w = TWO_PI * 1e6 * np.asarray(ch.mode_frequencies_mhz, float)
    if np.any(np.diff(w) <= 0):
        raise ConfigError("mode frequencies must be ascending (zigzag, tilt, COM)")
    ref = float(w[-1]) if ch.lamb_dicke_scaling == "common" else None
    return modes.ModeSpectrum.from_participation(
        w, modes.uniform_participation(3), cfg.ion_mass, cfg.coupling_wavenumber,
        reference_frequency=ref)
