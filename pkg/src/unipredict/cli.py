"""Command-line experiment runner.

Exit status: 0 when every checked inequality holds, 1 on a violation
(the offending row is named on stderr), 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bounds import SLACK_TOL, bound_rows, verify_proof_inequalities
from .config import ExperimentConfig, load_config, parse_config
from .decision import Predictor
from .evaluate import evaluate, mc_expected_loss, standard_schemes
from .exceptions import ConfigError, HorizonTooLarge
from .games import game_reports

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2

HEADERS = {
    "eval": ["t", "L_xi_cum", "L_mu_cum", "h_t", "H_cum", "S_cum"],
    "bounds": [
        "env_id", "n", "L_xi", "L_mu", "H_n", "unit_bound", "general_bound",
        "slack_unit", "slack_general", "pass",
    ],
    "game": [
        "n", "P_xi", "P_mu", "pbar_xi", "pbar_mu", "H_n", "eq12_bound",
        "eq13_threshold", "thm_ii_threshold", "in_winning_zone",
    ],
    "verify-ineq": ["A", "B", "min_low_z", "min_high_z", "pass"],
    "mc": ["env_id", "n", "scheme", "samples", "seed", "estimate", "stderr", "exact", "within_4se"],
}


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(float(value) + 0.0, ".17g")
    return str(value)


def _eval(cfg: ExperimentConfig, args):
    cfg.require_mu_in_class()
    loss = cfg.require_loss()
    rep = evaluate(cfg.mu, cfg.horizon, cfg.model_class, standard_schemes(cfg.mu, cfg.model_class, loss), cfg.exact_cap)
    rows, bad = [], []
    for row in rep.csv_rows():
        t, lx, lm, _, H, S = row
        rows.append(row)
        if S > H + SLACK_TOL:
            bad.append(f"t={t}: S_cum={fmt(S)} exceeds H_cum={fmt(H)}")
        if H > rep.d_mu + SLACK_TOL:
            bad.append(f"t={t}: H_cum={fmt(H)} exceeds d_mu={fmt(rep.d_mu)}")
        if lm > lx + SLACK_TOL:
            bad.append(f"t={t}: L_mu_cum={fmt(lm)} exceeds L_xi_cum={fmt(lx)}")
    return rows, bad


def _bounds(cfg, args):
    cfg.require_mu_in_class()
    loss = cfg.require_loss()
    rows = list(bound_rows(cfg.env_id, cfg.mu, cfg.model_class, loss, cfg.horizon, cfg.exact_cap))
    bad = [
        f"n={r[1]}: bound violated (slack_unit={fmt(r[7])}, slack_general={fmt(r[8])})"
        for r in rows if not r[9]
    ]
    return rows, bad


def _game(cfg, args):
    reports = game_reports(cfg.game_spec(), cfg.horizons)
    bad = []
    for r in reports:
        if not r.eq12_holds:
            bad.append(f"n={r.n}: P_xi={fmt(r.P_xi)} below the profit bound {fmt(r.eq12_bound)}")
        if not r.thm_ii_holds:
            bad.append(f"n={r.n}: past the time-to-win horizon but pbar_xi={fmt(r.pbar_xi)} <= 0")
    return [r.csv_row() for r in reports], bad


def _verify(cfg, args):
    results = verify_proof_inequalities(cfg.verify, threads=args.threads)
    rows = [(r.A, r.B, r.min_low_z, r.min_high_z, r.passed) for r in results]
    bad = [f"A={fmt(r.A)}: grid minimum below -{fmt(r.tolerance)}" for r in results if not r.passed]
    return rows, bad


def _mc(cfg, args):
    if cfg.mu is None or cfg.model_class is None:
        raise ConfigError(f"{cfg.env_id}: config needs 'models' and 'mu'")
    loss = cfg.require_loss()
    schemes = {"xi": Predictor(cfg.model_class, loss), "mu": Predictor(cfg.mu, loss)}
    rows, bad = [], []
    for n in cfg.horizons:
        exact = None
        if n <= cfg.exact_cap:
            exact = evaluate(cfg.mu, n, schemes=schemes, exact_cap=cfg.exact_cap)
        for name, sch in schemes.items():
            est, se = mc_expected_loss(cfg.mu, sch, n, cfg.samples, cfg.seed, threads=args.threads)
            if exact is None:
                rows.append((cfg.env_id, n, name, cfg.samples, cfg.seed, est, se, math.nan, True))
                continue
            ref = exact.L(name)
            ok = abs(est - ref) <= 4 * se + 1e-12
            rows.append((cfg.env_id, n, name, cfg.samples, cfg.seed, est, se, ref, ok))
            if not ok:
                bad.append(f"n={n}, scheme={name}: estimate {fmt(est)} is more than 4 stderr from exact {fmt(ref)}")
    return rows, bad


COMMANDS = {"eval": _eval, "bounds": _bounds, "game": _game, "verify-ineq": _verify, "mc": _mc}


def _manifest(cfg, args, status, violations):
    return {
        "subcommand": args.command,
        "env_id": cfg.env_id,
        "config_path": args.config,
        "config_sha256": cfg.digest,
        "fractions": cfg.fractions,
        "seed": cfg.seed,
        "exact_cap": cfg.exact_cap,
        "exit_status": status,
        "violations": violations,
        "versions": {
            "unipredict": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment configuration")
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--seed", type=int, help="override the Monte Carlo seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto; never changes results")
    common.add_argument("--exact-cap", type=int, help="largest horizon for exact enumeration")
    parser = argparse.ArgumentParser(prog="unipredict", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
        elif args.command == "verify-ineq":
            cfg = parse_config("id: verify-ineq\n")
        else:
            raise ConfigError(f"{args.command} needs --config")
        if args.seed is not None:
            cfg.seed = args.seed
        if args.exact_cap is not None:
            cfg.exact_cap = args.exact_cap
        if args.threads < 0:
            raise ConfigError("--threads must be >= 0")
        rows, violations = COMMANDS[args.command](cfg, args)
    except (ConfigError, HorizonTooLarge) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADERS[args.command])
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    status = EXIT_VIOLATION if violations else EXIT_OK
    if args.out:
        out = Path(args.out)
        out.write_text(buf.getvalue(), newline="\n")
        manifest = _manifest(cfg, args, status, [f"{cfg.env_id}: {v}" for v in violations])
        Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(buf.getvalue())
    for v in violations:
        print(f"violation: {cfg.env_id}: {v}", file=sys.stderr)
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
