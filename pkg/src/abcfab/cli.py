"""``fab`` command-line front end.

Subcommands::

    fab simulate --system NAME [--param k=v ...] --alpha A --h H --t-final T --out PATH
    fab converge --system tbeta --beta B --alpha A --h H1,H2,... --t-final T --out PATH
    fab phi --n-max N --alphas A1,A2,... --h H --out PATH
    fab check --L L --M M --b B --alpha A [--c C]

``simulate`` also accepts ``--config FILE``: a JSON object with any of the keys
``system, params, ic, alpha, h, t_final, scheme, variant, bootstrap, refine,
out, manifest``. Command-line flags override values from the file.

Exit status: 0 success, 1 usage or configuration error, 2 truncated run.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional, Sequence

from . import __version__
from .analysis import contraction_check, convergence_table, phi_grid
from .errors import FabError
from .integrators import BOOTSTRAPS, SCHEMES, VARIANTS, Grid, integrate
from .output import csv_text, json_text, manifest_path, write_atomic
from .systems import builtin_system

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TRUNCATED = 2

CONFIG_KEYS = ("system", "params", "ic", "alpha", "h", "t_final", "scheme", "variant",
               "bootstrap", "refine", "out", "manifest")
DEFAULTS = {"params": {}, "ic": None, "scheme": "two_step", "variant": "corrected",
            "bootstrap": "rk4_classical", "refine": 8, "manifest": None}
REQUIRED = ("system", "alpha", "h", "t_final", "out")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected k=v, got {text!r}")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fab", description="Solver for ABC fractional initial-value problems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="integrate a system and write its trajectory")
    sim.add_argument("--config", help="JSON run configuration; flags override it")
    sim.add_argument("--system")
    sim.add_argument("--param", action="append", type=_param, default=[], metavar="K=V")
    sim.add_argument("--ic", type=_floats, help="initial state, comma-separated")
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--h", type=float)
    sim.add_argument("--t-final", dest="t_final", type=float)
    sim.add_argument("--scheme", choices=SCHEMES)
    sim.add_argument("--variant", choices=VARIANTS)
    sim.add_argument("--bootstrap", choices=BOOTSTRAPS)
    sim.add_argument("--refine", type=int, help="sub-mesh factor of the reference scheme")
    sim.add_argument("--out", help="trajectory CSV path")
    sim.add_argument("--manifest", help="manifest path (default: <out stem>.manifest.json)")

    conv = sub.add_parser("converge", help="error table against the closed-form solution")
    conv.add_argument("--system", default="tbeta", choices=("tbeta",))
    conv.add_argument("--beta", type=float, required=True)
    conv.add_argument("--alpha", type=float, required=True)
    conv.add_argument("--h", type=_floats, required=True, help="step sizes, decreasing")
    conv.add_argument("--t-final", dest="t_final", type=float, required=True)
    conv.add_argument("--scheme", choices=SCHEMES, default="two_step")
    conv.add_argument("--variant", choices=VARIANTS, default="corrected")
    conv.add_argument("--bootstrap", choices=BOOTSTRAPS, default="rk4_classical")
    conv.add_argument("--out", required=True)

    phi = sub.add_parser("phi", help="grid of the truncation factor")
    phi.add_argument("--n-max", dest="n_max", type=int, required=True)
    phi.add_argument("--alphas", type=_floats, required=True)
    phi.add_argument("--h", type=float, required=True)
    phi.add_argument("--M", type=float, default=1.0, help="bound on |f''| (default 1)")
    phi.add_argument("--out", required=True)

    chk = sub.add_parser("check", help="contraction radius for uniqueness")
    chk.add_argument("--L", type=float, required=True, help="Lipschitz constant of f")
    chk.add_argument("--M", type=float, required=True, help="sup |f| on the box")
    chk.add_argument("--b", type=float, required=True, help="radius of the box")
    chk.add_argument("--alpha", type=float, required=True)
    chk.add_argument("--c", type=float, help="interval length to test")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional JSON file and explicit flags."""
    config = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}")
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(CONFIG_KEYS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        config.update(loaded)
    for key in CONFIG_KEYS:
        if key == "params":
            continue
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    params = dict(config.get("params") or {})
    params.update(dict(args.param))
    config["params"] = params
    missing = [k for k in REQUIRED if config.get(k) is None]
    if missing:
        raise UsageError(f"missing required settings: {', '.join(missing)}")
    return config


def cmd_simulate(config: dict) -> int:
    system = builtin_system(config["system"], config["params"])
    grid = Grid.from_final_time(float(config["h"]), float(config["t_final"]))
    traj = integrate(system, config["ic"], grid, float(config["alpha"]), config["scheme"],
                     config["variant"], config["bootstrap"], int(config["refine"]))

    header = ["t"] + [f"x{i + 1}" for i in range(system.dimension)]
    rows = ([t, *state] for t, state in zip(traj.times, traj.states))
    write_atomic(config["out"], csv_text(header, rows))

    meta = traj.meta
    diagnostics = {
        "rows": len(traj),
        "completed": not traj.truncated,
        "truncated_at": meta["truncated_at"],
        "truncation_reason": meta["truncation_reason"],
        "max_stability": meta["max_stability"],
        "system_params": meta["params"],
        "system_options": meta["options"],
    }
    if "hyper4d_f3_variant" in system.options:
        diagnostics["note"] = (
            "third equation of hyper4d uses the cross term selected by "
            f"hyper4d_f3_variant={system.options['hyper4d_f3_variant']!r}"
        )
    if "fixed_point_unconverged" in meta:
        diagnostics["fixed_point_unconverged"] = meta["fixed_point_unconverged"]
    recorded = {k: config[k] for k in CONFIG_KEYS if k != "manifest"}
    merged = {**system.params, **system.options}
    recorded["params"] = {k: merged[k] for k in sorted(config["params"])}
    manifest = {"config": recorded, "version": __version__, "diagnostics": diagnostics}
    write_atomic(manifest_path(config["out"], config.get("manifest")), json_text(manifest))

    if traj.truncated:
        print(f"fab: run truncated: {meta['truncation_reason']}", file=sys.stderr)
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_converge(args) -> int:
    rows = convergence_table(args.alpha, args.beta, args.h, args.t_final,
                             args.scheme, args.variant, args.bootstrap)
    body = ([r.h, r.max_abs_error, r.observed_order, r.valid] for r in rows)
    write_atomic(args.out, csv_text(["h", "max_abs_error", "observed_order", "valid"], body))
    return EXIT_OK


def cmd_phi(args) -> int:
    rows = phi_grid(args.n_max, args.alphas, args.h, args.M)
    header = list(rows[0])
    write_atomic(args.out, csv_text(header, ([r[k] for k in header] for r in rows)))
    return EXIT_OK


def cmd_check(args) -> int:
    report = contraction_check(args.L, args.M, args.b, args.alpha, args.c)
    sys.stdout.write(json_text(report.to_dict()))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(resolve_config(args))
        if args.command == "converge":
            return cmd_converge(args)
        if args.command == "phi":
            return cmd_phi(args)
        return cmd_check(args)
    except (UsageError, FabError, ValueError, LookupError, OSError) as exc:
        print(f"fab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
