"""Command-line entry point: ``modegate <command> --config <path|preset>``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from . import config as cfgmod
from . import engineer, gatekernel, verify
from .errors import ConfigError, ModeGateError
from .pulse import eval_pulse, scan_l, select_l

log = logging.getLogger("modegate")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4
TWO_PI = 2.0 * math.pi


class Table:
    """Header plus rows; rendered as CSV or JSON with fixed significant digits."""

    def __init__(self, columns, rows=(), meta=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.meta = meta or {}

    def render(self, fmt: str, precision: int) -> str:
        if fmt == "json":
            records = [{c: _num(v, precision) for c, v in zip(self.columns, r)} for r in self.rows]
            doc = {"meta": _jsonable(self.meta, precision), "rows": records}
            return json.dumps(doc, indent=2, sort_keys=True) + "\n"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow([_fmt(v, precision) for v in r])
        return buf.getvalue()


def _fmt(v, precision):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), f".{precision}g")
    return str(v)


def _num(v, precision):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        x = float(v)
        return float(format(x, f".{precision}g")) if math.isfinite(x) else str(x)
    return v


def _jsonable(obj, precision):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v, precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v, precision) for v in obj]
    return _num(obj, precision)


# --- shared steps -------------------------------------------------------------

def _parities(args, cfg):
    choice = args.parity or cfg.gate.parity
    return ["odd", "even"] if choice == "both" else [choice]


def _k(cfg, spectrum, tau):
    if cfg.gate.k is not None:
        return np.asarray(cfg.gate.k, int)
    return gatekernel.assign_k(spectrum.frequencies, tau)[0]


def _designs(cfg, spectrum, parities, theta=None):
    tau = cfg.require_tau()
    k = _k(cfg, spectrum, tau)
    g = cfg.gate
    scan = scan_l(spectrum, g.ion_i, g.ion_j, k, tau, g.l_max)
    out = {}
    for par in parities:
        l = select_l(scan, par)
        out[par] = engineer.design_gate(
            spectrum, g.ion_i, g.ion_j, tau, l=l, k=k,
            theta_target=cfg.theta_target if theta is None else theta,
            nbar=cfg.nbar, alpha_budget=g.alpha_budget)
    return out


def _shifts(cfg):
    sw = cfg.sweep
    lo, hi = TWO_PI * 1e3 * sw.delta_omega_min_khz, TWO_PI * 1e3 * sw.delta_omega_max_khz
    shifts = np.linspace(lo, hi, sw.steps)
    shifts[np.abs(shifts) <= 1e-9 * (hi - lo)] = 0.0
    return shifts


# --- commands -----------------------------------------------------------------

def cmd_modes(cfg, args):
    spec = cfgmod.build_spectrum(cfg)
    n = spec.mode_count
    cols = ["mode", "frequency_hz", "omega_rad_s"]
    tau = cfg.tau
    if tau is not None:
        k = _k(cfg, spec, tau)
        dk = gatekernel.commensurate_offsets(spec.frequencies, tau, k)
        cols += ["k", "delta_k"]
    cols += [f"nu_{i}" for i in range(n)] + [f"eta_{i}" for i in range(n)]
    rows = []
    for p in range(n):
        w = spec.frequencies[p]
        row = [p, w / TWO_PI, w]
        if tau is not None:
            row += [int(k[p]), dk[p]]
        row += list(spec.participation[p]) + list(spec.lamb_dicke[p])
        rows.append(row)
    return Table(cols, rows, {"modes": cfg.chain.modes,
                              "lamb_dicke_scaling": cfg.chain.lamb_dicke_scaling})


def design_report(cfg, parities):
    spec = cfgmod.build_spectrum(cfg)
    designs = _designs(cfg, spec, parities)
    eps = cfg.gate.alpha_budget
    n = spec.mode_count
    cols = ["parity", "l", "omega_rad_s", "omega_2pi_mhz", "chi", "chi_sign", "alpha",
            "alpha_series", "alpha_budget"] + [f"dk_tolerance_{p}" for p in range(n)] \
        + [f"delta_k_{p}" for p in range(n)] + ["power_ratio_vs_odd"]
    rows = []
    odd_omega = designs["odd"].pulse.omega if "odd" in designs else None
    for par, d in designs.items():
        i, j = d.ion_pair
        series = gatekernel.alpha_series(spec, i, j, d.k_indices, d.pulse, d.delta_k)
        try:
            tol = gatekernel.budget_to_tolerance(d, eps)
        except ModeGateError:
            tol = np.full(n, float("nan"))
        ratio = d.pulse.omega / odd_omega if odd_omega else float("nan")
        rows.append([par, d.pulse.l, d.pulse.omega, d.pulse.omega / TWO_PI / 1e6, d.chi,
                     d.pulse.chi_sign, d.alpha, series, eps] + list(tol) + list(d.delta_k)
                    + [ratio])
    meta = {"ion_pair": [cfg.gate.ion_i, cfg.gate.ion_j], "tau_s": cfg.tau,
            "theta_target": cfg.theta_target, "k": [int(x) for x in designs[parities[0]].k_indices]}
    return Table(cols, rows, meta), designs


def cmd_design(cfg, args):
    return design_report(cfg, _parities(args, cfg))[0]


def cmd_fig3(cfg, args):
    spec = cfgmod.build_spectrum(cfg)
    tau = cfg.require_tau()
    k = _k(cfg, spec, tau)
    scan = scan_l(spec, cfg.gate.ion_i, cfg.gate.ion_j, k, tau, cfg.gate.l_max)
    rows = [[int(l), int(par), v, int(m)] for l, par, v, m in scan.rows]
    return Table(["l", "parity", "value", "resonance_marker"], rows,
                 {"k": [int(x) for x in k], "odd_pick": select_l(scan, "odd"),
                  "even_pick": select_l(scan, "even")})


def cmd_fig4(cfg, args):
    spec = cfgmod.build_spectrum(cfg)
    designs = _designs(cfg, spec, ["odd", "even"])
    tau = cfg.require_tau()
    n = cfg.fig4.samples
    # odd sample count puts tau / 2 on the grid exactly
    n += 1 - n % 2
    t = tau * (np.arange(n) / (n - 1))
    g_odd = eval_pulse(designs["odd"].pulse, t)
    g_even = eval_pulse(designs["even"].pulse, t)
    rows = [[a, a * 1e6, b, c] for a, b, c in zip(t, g_odd, g_even)]
    return Table(["t_s", "t_us", "g_odd", "g_even"], rows,
                 {"l_odd": designs["odd"].pulse.l, "l_even": designs["even"].pulse.l,
                  "midpoint_s": tau / 2})


def cmd_fig5(cfg, args):
    spec = cfgmod.build_spectrum(cfg)
    designs = _designs(cfg, spec, ["odd", "even"])
    shifts = _shifts(cfg)
    a_odd = engineer.sweep_common_shift(designs["odd"], None, 0, shifts).column("alpha")
    a_even = engineer.sweep_common_shift(designs["even"], None, 0, shifts).column("alpha")
    rows = [[s, s / TWO_PI, a, b] for s, a, b in zip(shifts, a_odd, a_even)]
    return Table(["delta_omega_rad_s", "delta_omega_2pi_hz", "alpha_odd", "alpha_even"], rows,
                 {"l_odd": designs["odd"].pulse.l, "l_even": designs["even"].pulse.l})


def cmd_sweep(cfg, args):
    spec = cfgmod.build_spectrum(cfg)
    designs = _designs(cfg, spec, _parities(args, cfg))
    shifts = _shifts(cfg)
    cols = ["delta_omega_rad_s", "delta_omega_2pi_hz"]
    data = []
    for d in designs.values():
        cols.append(f"alpha_l{d.pulse.l}")
        data.append(engineer.sweep_common_shift(d, None, 0, shifts).column("alpha"))
    rows = [[s, s / TWO_PI] + [col[n] for col in data] for n, s in enumerate(shifts)]
    return Table(cols, rows)


def cmd_engineer(cfg, args):
    e = cfg.engineering
    centers = e.window_centers_mhz or cfg.chain.mode_frequencies_mhz
    if centers is None:
        raise ConfigError("engineering.window_centers_mhz is required")
    win = engineer.FrequencyWindow.around(
        TWO_PI * 1e6 * np.asarray(centers, float), TWO_PI * 1e3 * e.window_halfwidth_khz,
        e.tau_min_us * 1e-6, e.tau_max_us * 1e-6)
    sols = engineer.search_condition1(win, e.top_m, e.grid_points)
    n = len(centers)
    cols = ["rank", "tau_us", "residual"] + [f"k_{p}" for p in range(n)] \
        + [f"ideal_frequency_mhz_{p}" for p in range(n)]
    rows = []
    for r, s in enumerate(sols):
        rows.append([r, s.tau * 1e6, s.residual] + list(s.k)
                    + list(s.ideal_frequencies() / TWO_PI / 1e6))
    return Table(cols, rows)


def cmd_verify(cfg, args):
    seed = cfg.verify.seed if args.seed is None else args.seed
    spec = cfgmod.build_spectrum(cfg)
    designs = list(_designs(cfg, spec, ["odd", "even"]).values()) if cfg.tau else []
    return verify.run_suite(seed, cfg.verify.instances, designs, args.inject_chi_error)


COMMANDS = {
    "modes": cmd_modes,
    "design": cmd_design,
    "fig3": cmd_fig3,
    "fig4": cmd_fig4,
    "fig5": cmd_fig5,
    "engineer": cmd_engineer,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="modegate", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="TOML file or preset name (%s)" % ", ".join(cfgmod.preset_names()))
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--parity", choices=["odd", "even", "both"], default=None)
        p.add_argument("--seed", type=int, default=None)
        if name == "verify":
            p.add_argument("--inject-chi-error", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = cfgmod.load_config(args.config)
        result = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModeGateError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = args.out or cfg.output.path
    if args.command == "verify":
        _write(json.dumps(result, indent=2, sort_keys=True) + "\n", out)
        return EXIT_OK if result["passed"] else EXIT_VERIFY
    _write(result.render(args.format or cfg.output.format, cfg.output.precision), out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
