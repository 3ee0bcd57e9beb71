"""Command-line entry points: ``analyze``, ``synthesize``, ``simulate``, ``stabilize``.

Each command reads a JSON run config, writes CSV series and a JSON manifest
into ``--out`` and exits with 0 on success, 2 on a config error, 3 on a
conditioning failure and 4 when an acceptance threshold is missed.
Wall-clock timings go to a separate ``timings.json`` so the manifest is
byte-reproducible.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import gap_statistics, multiplicity_classes, verify_H2, verify_H3
from .config import RunConfig, random_field
from .control_operator import build_control_operator
from .errors import ConditioningError, HypothesisError, MeanMismatchError, TorusControlError
from .spectral import TWO_PI, sobolev_norm, sobolev_weights
from .stabilization import (
    build_feedback,
    closed_loop_simulate,
    decay_fit,
    observability_constant,
)
from .symbols import EigenvalueTable, symbol_growth_check
from .synthesis import (
    build_dual_basis,
    duhamel_solve,
    spillover,
    steer,
)

log = logging.getLogger("torus_control")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONDITIONING = 3
EXIT_THRESHOLD = 4

RESIDUAL_TOL = 1e-6
STEERING_TOL = 1e-6
MEAN_TOL = 1e-10


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _write_json(path: Path, obj):
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _mode_rows(coeffs: np.ndarray, radius: int):
    for a in range(coeffs.shape[0]):
        for b in range(coeffs.shape[1]):
            z = coeffs[a, b]
            yield (a - radius, b - radius, float(z.real), float(z.imag))


def _setup(cfg: RunConfig):
    sym = cfg.symbol()
    table = EigenvalueTable.build(sym, cfg.N)
    op = build_control_operator(
        cfg.N, cfg.omega1, cfg.omega2, bump_grid=cfg.bump_grid, kmax_margin=cfg.kmax_margin
    )
    return sym, table, op


def _check_horizon(sym, T, manifest):
    gp = sym.analytic_gamma_prime
    if gp is None:
        manifest["horizon_warning"] = "no analytic gamma' for this model; Gram conditioning is the only guard"
        log.warning(manifest["horizon_warning"])
    elif T <= TWO_PI / gp:
        manifest["horizon_warning"] = f"T={T} <= 2 pi / gamma' = {TWO_PI / gp}; expect ill conditioning"
        log.warning(manifest["horizon_warning"])


def _base_manifest(command: str, cfg: RunConfig) -> dict:
    return {
        "command": command,
        "config": cfg.to_dict(),
        "version": __version__,
        "seed": cfg.seed,
        "tolerances": {
            "residual": RESIDUAL_TOL,
            "steering_relative": STEERING_TOL,
            "mean_mode": MEAN_TOL,
        },
    }


def cmd_analyze(cfg: RunConfig, out: Path) -> int:
    sym, table, _ = _setup(cfg)
    report = multiplicity_classes(table)
    gaps = gap_statistics(report, [tuple(k) for k in cfg.exclusion])
    h2, h3 = verify_H2(table), verify_H3(table)
    growth = symbol_growth_check(sym, cfg.N)
    zero_class = [r for r, v in zip(report.representatives, report.values) if v == 0.0]
    result = {
        "model": sym.name,
        "radius": cfg.N,
        "declared_symmetry": sym.declared_symmetry,
        "distinct_eigenvalues": len(report.representatives),
        "multiplicity_histogram": report.histogram(),
        "lambda_zero_class_size": len(report.classes[zero_class[0]]) if zero_class else 0,
        "gaps": gaps.to_dict(),
        "hypotheses": {"H2": h2.to_dict(), "H3": h3.to_dict()},
        "growth": {
            "holds": growth.holds,
            "worst_ratio": growth.worst_ratio,
            "worst_mode": growth.worst_mode,
            "order_r": sym.order_r,
            "growth_C": sym.growth_C,
        },
    }
    _write_json(out / "analysis.json", result)
    manifest = _base_manifest("analyze", cfg)
    manifest["result"] = result
    _write_json(out / "manifest.json", manifest)
    return EXIT_OK


def cmd_synthesize(cfg: RunConfig, out: Path) -> int:
    sym, table, op = _setup(cfg)
    manifest = _base_manifest("synthesize", cfg)
    _check_horizon(sym, cfg.T, manifest)
    u0, u1 = cfg.initial_field(), cfg.target_field()
    basis = build_dual_basis(table, cfg.T)
    res = steer(u0, u1, table, op, cfg.T, cfg.s, cfg.symmetry, basis=basis)
    _write_csv(out / "coefficients.csv", ["k1", "k2", "re_h", "im_h"], _mode_rows(res.control.coeffs, cfg.N))
    _write_csv(out / "residuals.csv", ["k1", "k2", "re_residual", "im_residual"], _mode_rows(res.residuals, cfg.N))
    report = multiplicity_classes(table)
    manifest.update(
        {
            "gram_condition_number": basis.condition_number,
            "biorthogonality_residual": basis.biorthogonality_residual,
            "distinct_eigenvalues": len(basis),
            "gaps": gap_statistics(report).to_dict(),
            "hypothesis": (cfg.symmetry or sym.declared_symmetry),
            "max_moment_residual": res.max_residual,
            "final_relative_error": res.relative_error,
            "control_norm": res.control.norm(cfg.s),
            "norm_ratio": res.norm_ratio,
        }
    )
    if cfg.spillover_radius:
        sp = spillover(u0, u1, res.control, table, op, cfg.T, cfg.spillover_radius, cfg.s)
        manifest["spillover"] = sp.to_dict()
    _write_json(out / "manifest.json", manifest)
    if res.max_residual > RESIDUAL_TOL or res.relative_error > STEERING_TOL:
        log.error("steering thresholds missed: residual %.3e, relative error %.3e",
                  res.max_residual, res.relative_error)
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    sym, table, op = _setup(cfg)
    manifest = _base_manifest("simulate", cfg)
    u0 = cfg.initial_field()
    times = np.linspace(0.0, cfg.T, cfg.n_times)
    if cfg.target is None:
        control, u1 = None, u0
        manifest["control"] = "none"
    else:
        _check_horizon(sym, cfg.T, manifest)
        u1 = cfg.target_field()
        res = steer(u0, u1, table, op, cfg.T, cfg.s, cfg.symmetry)
        control = res.control
        manifest["gram_condition_number"] = res.basis.condition_number
        manifest["max_moment_residual"] = res.max_residual
    M = cfg.spillover_radius or cfg.N
    big_table, big_op = (table, op) if M == cfg.N else (table.resized(M), op.resized(M))
    traj = duhamel_solve(u0.resized(M), control, big_op, big_table, times)
    target_big = u1.resized(M)
    norms = traj.norms(cfg.s)
    dist = traj.distances(target_big, cfg.s)
    header = ["t", "norm", "distance"]
    cols = [times, norms, dist]
    if M != cfg.N:
        w = sobolev_weights(M, 2.0 * cfg.s)
        outside = np.ones(w.shape, bool)
        outside[M - cfg.N : M + cfg.N + 1, M - cfg.N : M + cfg.N + 1] = False
        leak = [TWO_PI * math.sqrt(float(np.sum((w * np.abs(u.coeffs) ** 2)[outside]))) for u in traj.states]
        header.append("leakage")
        cols.append(np.array(leak))
        manifest["final_leakage"] = leak[-1]
    _write_csv(out / "trajectory.csv", header, zip(*cols))
    ref = sobolev_norm(u1, 0.0)
    final_err = float(traj.distances(target_big, 0.0)[-1])
    rel = final_err / ref if ref > 0 else final_err
    manifest["final_relative_error"] = rel
    _write_json(out / "manifest.json", manifest)
    if control is not None and M == cfg.N and rel > STEERING_TOL:
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_stabilize(cfg: RunConfig, out: Path) -> int:
    _, table, op = _setup(cfg)
    manifest = _base_manifest("stabilize", cfg)
    fb = build_feedback(table, op, cfg.T, cfg.decay_lambda, cfg.s)
    u0 = cfg.initial_field() if cfg.initial is not None else random_field(cfg.N, cfg.seed + 1)
    traj = closed_loop_simulate(u0, table, op, fb, cfg.t_end, cfg.dt)
    rep = decay_fit(traj, cfg.decay_lambda, cfg.s)
    drift = float(max(abs(u.mean - u0.mean) for u in traj.states))
    bound = rep.bound()
    _write_csv(out / "decay.csv", ["t", "distance", "bound"], zip(rep.times, rep.distances, bound))
    delta = observability_constant(table, op, cfg.T, cfg.s)
    gains = {
        "gain_norm": fb.gain_norm,
        "operator_norm_G": op.bound(cfg.s),
        "gramian_condition": fb.gramian_condition,
        "gramian_min_eigenvalue": fb.gramian_min_eig,
        "observability_delta": delta,
        "decay": rep.to_dict(),
        "mean_mode_drift": drift,
    }
    _write_json(out / "gains.json", gains)
    manifest["result"] = gains
    _write_json(out / "manifest.json", manifest)
    ok = (
        rep.fitted_exponent <= -0.9 * cfg.decay_lambda
        and np.all(rep.distances <= bound * (1 + 1e-12))
        and drift <= MEAN_TOL
    )
    return EXIT_OK if ok else EXIT_THRESHOLD


COMMANDS = {
    "analyze": cmd_analyze,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "stabilize": cmd_stabilize,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torus-control", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = RunConfig.load(args.config, args.seed)
    except TorusControlError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](cfg, out)
    except ConditioningError as exc:
        print(f"conditioning failure: {exc}", file=sys.stderr)
        code = EXIT_CONDITIONING
    except (MeanMismatchError, HypothesisError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except (TorusControlError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    _write_json(out / "timings.json", {"command": args.command, "seconds": time.perf_counter() - t0})
    return code


if __name__ == "__main__":
    sys.exit(main())
