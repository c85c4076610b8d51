"""Command-line experiment runner.

Subcommands::

    greedycoh coherence [DICT_FILE] [--config CFG]
    greedycoh run --config CFG [--out DIR] [--seed N]
    greedycoh oracle --config CFG --m M [--seed N]

Exit status is 0 on success, 1 on usage/config/data errors and 2 when the
run succeeded but a hypothesis was violated or a check did not hold.

The config is a JSON object::

    {
      "dictionary": {"type": "orthonormal", "dim": 16}
                  | {"type": "incoherent", "dim": 64, "count": 64, "target_mu1": 0.3,
                     "seed": 3, "max_attempts": 100}
                  | {"type": "file", "path": "dict.txt"},
      "signal": {"type": "sparse", "sparsity": 5, "amp_low": 1, "amp_high": 2, "seed": 4}
              | {"type": "file", "path": "rep.txt"},
      "algorithm": "PGA" | "OGA" | "both",
      "stop": {"max_iterations": 200, "residual_tol": 1e-12, "inner_product_tol": 1e-14},
      "checks": ["theorem1", "theoremA_recovery", ...],
      "p": 1.5,
      "oracle_m": 2,
      "snapshots": false,
      "output_dir": "out"
    }

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import analysis as an
from .dictionary import (
    Dictionary,
    _atomic_write,
    build_incoherent,
    build_orthonormal,
    frame_bounds_check,
    load_dictionary,
)
from .errors import GreedyError
from .greedy import GreedyTrace, StopRule, run_oga, run_pga, save_trace
from .signals import (
    SparseRepresentation,
    check_lemma2,
    check_lemma3_descent,
    gen_sparse_signal,
    load_representation,
    rep_quasi_norm,
    synthesize,
)

CHECKS = (
    "theorem1",
    "theorem2",
    "theoremA_recovery",
    "theoremA_exponential",
    "energy_recursion",
    "lemma1",
    "lemma2",
    "lemma3",
    "oracle",
)
NEEDS_PGA = {"theorem1", "theorem2", "theoremA_exponential", "energy_recursion", "lemma2", "lemma3"}
NEEDS_OGA = {"theoremA_recovery", "oracle"}
NEEDS_THIRD = {"theorem1", "theorem2", "energy_recursion", "lemma3"}
NEEDS_HALF = {"theoremA_recovery", "theoremA_exponential"}


class ConfigError(Exception):
    pass


def _fmt(x: float) -> str:
    return format(x, ".17g")


@dataclass
class Experiment:
    dictionary: dict
    signal: dict
    algorithm: str = "both"
    stop: StopRule = field(default_factory=StopRule)
    checks: list = field(default_factory=list)
    p: float | None = None
    oracle_m: int = 1
    snapshots: bool = False
    output_dir: str = "out"
    base_dir: str = "."

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)


def load_config(path: str, seed: int | None = None) -> Experiment:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    base = os.path.dirname(os.path.abspath(path))
    dsrc = dict(raw.get("dictionary") or {})
    ssrc = dict(raw.get("signal") or {})
    if dsrc.get("type") not in ("orthonormal", "incoherent", "file"):
        raise ConfigError("dictionary.type must be orthonormal, incoherent or file")
    if ssrc.get("type") not in ("sparse", "file"):
        raise ConfigError("signal.type must be sparse or file")
    if seed is not None:
        if dsrc["type"] == "incoherent":
            dsrc["seed"] = seed
        if ssrc["type"] == "sparse":
            ssrc["seed"] = seed
    algorithm = raw.get("algorithm", "both")
    if algorithm not in ("PGA", "OGA", "both"):
        raise ConfigError("algorithm must be PGA, OGA or both")
    checks = list(raw.get("checks", []))
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown checks: {', '.join(unknown)}")
    p = raw.get("p")
    if "theorem2" in checks and p is None:
        raise ConfigError("check theorem2 requires p")
    if p is not None and not 1.0 <= float(p) < 2.0:
        raise ConfigError("p must satisfy 1 <= p < 2")
    runs = {"PGA": {"PGA"}, "OGA": {"OGA"}, "both": {"PGA", "OGA"}}[algorithm]
    for c in checks:
        if c in NEEDS_PGA and "PGA" not in runs:
            raise ConfigError(f"check {c} needs a PGA run but algorithm is {algorithm}")
        if c in NEEDS_OGA and "OGA" not in runs:
            raise ConfigError(f"check {c} needs an OGA run but algorithm is {algorithm}")
    try:
        stop = StopRule(**raw.get("stop", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"stop: {e}") from None
    oracle_m = int(raw.get("oracle_m", 1))
    if oracle_m < 1:
        raise ConfigError("oracle_m must be positive")
    return Experiment(
        dictionary=dsrc,
        signal=ssrc,
        algorithm=algorithm,
        stop=stop,
        checks=checks,
        p=None if p is None else float(p),
        oracle_m=oracle_m,
        snapshots=bool(raw.get("snapshots", False)),
        output_dir=raw.get("output_dir", "out"),
        base_dir=base,
    )


def make_dictionary(exp: Experiment) -> Dictionary:
    src = exp.dictionary
    try:
        if src["type"] == "orthonormal":
            return build_orthonormal(int(src["dim"]))
        if src["type"] == "incoherent":
            return build_incoherent(
                int(src["dim"]),
                int(src["count"]),
                float(src["target_mu1"]),
                seed=int(src.get("seed", 0)),
                max_attempts=int(src.get("max_attempts", 100)),
            )
        return load_dictionary(exp.resolve(src["path"]))
    except KeyError as e:
        raise ConfigError(f"dictionary: missing field {e}") from None


def make_signal(exp: Experiment, D: Dictionary) -> SparseRepresentation:
    src = exp.signal
    try:
        if src["type"] == "sparse":
            return gen_sparse_signal(
                D,
                int(src["sparsity"]),
                float(src.get("amp_low", 1.0)),
                float(src.get("amp_high", 2.0)),
                seed=int(src.get("seed", 0)),
            )
        return load_representation(exp.resolve(src["path"]), D.label)
    except KeyError as e:
        raise ConfigError(f"signal: missing field {e}") from None


def _lemma2_report(D: Dictionary, trace: GreedyTrace) -> an.TheoremReport:
    worst, worst_step, holds = np.inf, 0, True
    for m, rep in enumerate(trace.coefficient_path()[:-1]):
        if not rep.entries:
            continue
        for k in range(D.count):
            r = check_lemma2(D, rep, k, 0.0)
            margin = r.rhs + r.slack_used - r.lhs
            holds &= r.holds
            if margin < worst:
                worst, worst_step = margin, m
    return an.TheoremReport(an.Theorem.LEMMA_2, bool(holds), float(worst), worst_step,
                            f"steps={len(trace)} atoms={D.count}")


def _lemma3_report(trace: GreedyTrace, p: float, mu1: float) -> an.TheoremReport:
    path = trace.coefficient_path()
    worst, worst_step, holds, grew = np.inf, 0, True, False
    for m in range(len(trace)):
        r = check_lemma3_descent(path[m], path[m + 1], p, mu1)
        holds &= r.holds and "max_nonincreasing=True" in r.detail
        grew |= "support_grew=True" in r.detail
        margin = r.rhs + r.slack_used - r.lhs
        if margin < worst:
            worst, worst_step = margin, m + 1
    if not len(trace):
        worst = 0.0
    return an.TheoremReport(an.Theorem.LEMMA_3, bool(holds), float(worst), worst_step,
                            f"p={p!r} mu1={mu1!r} support_grew={grew}")


def run_checks(exp, D, rep, f, pga, oga, warn) -> list[tuple[str, an.TheoremReport]]:
    mu1 = D.coherence.mu1
    n1 = rep.one_norm()
    out = []
    for name in exp.checks:
        if name in NEEDS_THIRD and not mu1 < 1.0 / 3.0:
            warn(f"{name}: hypothesis mu1 < 1/3 fails (mu1={_fmt(mu1)})")
        if name in NEEDS_HALF and not mu1 < 0.5:
            warn(f"{name}: hypothesis mu1 < 1/2 fails (mu1={_fmt(mu1)})")
        if name == "theorem1":
            rep_ = an.check_theorem1(pga, n1, horizon=exp.stop.max_iterations)
        elif name == "theorem2":
            rep_ = an.check_theorem2(pga, exp.p, rep_quasi_norm(rep, exp.p), mu1)
        elif name == "theoremA_recovery":
            rep_ = an.check_exact_recovery(oga, rep.support)
        elif name == "theoremA_exponential":
            rep_ = an.check_exponential_decay(pga)
        elif name == "energy_recursion":
            rep_ = an.check_energy_recursion(pga, n1 * n1)
        elif name == "lemma1":
            fc = frame_bounds_check(D, rep)
            rep_ = an.TheoremReport(
                an.Theorem.LEMMA_1, fc.holds, min(fc.mid - fc.lhs, fc.rhs - fc.mid), 0,
                f"lhs={_fmt(fc.lhs)} mid={_fmt(fc.mid)} rhs={_fmt(fc.rhs)}",
            )
        elif name == "lemma2":
            rep_ = _lemma2_report(D, pga)
        elif name == "lemma3":
            if mu1 < 1.0 / 3.0:
                rep_ = _lemma3_report(pga, exp.p or 1.0, mu1)
            else:
                rep_ = an.TheoremReport(an.Theorem.LEMMA_3, False, float("nan"), 0,
                                        f"not evaluated: mu1={_fmt(mu1)} >= 1/3")
        else:  # oracle
            err, sup = an.best_mterm_oracle(D, f, exp.oracle_m)
            got = oga.residual_at(exp.oracle_m)
            rep_ = an.TheoremReport(
                an.Theorem.ORACLE, got >= err - 1e-9 * oga.initial_norm, got - err, exp.oracle_m,
                f"oracle_error={_fmt(err)} oracle_support={' '.join(map(str, sup))} "
                f"oga_residual={_fmt(got)}",
            )
        if not rep_.holds:
            warn(f"{name}: does not hold")
        out.append((name, rep_))
    return out


def cmd_run(exp: Experiment, out_dir: str, quiet: bool = False) -> int:
    warnings: list[str] = []
    D = make_dictionary(exp)
    rep = make_signal(exp, D)
    f = synthesize(D, rep)
    pga = oga = None
    if exp.algorithm in ("PGA", "both"):
        pga = run_pga(D, f, exp.stop, rep)
    if exp.algorithm in ("OGA", "both"):
        oga = run_oga(D, f, exp.stop)
    reports = run_checks(exp, D, rep, f, pga, oga, warnings.append)

    parent = os.path.dirname(os.path.abspath(out_dir))
    os.makedirs(parent, exist_ok=True)
    staging = tempfile.mkdtemp(prefix=".greedycoh-", dir=parent)
    try:
        written = []

        def put(name, text):
            _atomic_write(os.path.join(staging, name), text)
            written.append(name)

        put("coherence.txt", _coherence_text(D))
        if pga is not None:
            snap = os.path.join(staging, "snapshots_pga") if exp.snapshots else None
            save_trace(pga, os.path.join(staging, "trace_pga.csv"), snap)
            written.append("trace_pga.csv")
            if snap:
                written.append("snapshots_pga")
        if oga is not None:
            snap = os.path.join(staging, "snapshots_oga") if exp.snapshots else None
            save_trace(oga, os.path.join(staging, "trace_oga.csv"), snap)
            written.append("trace_oga.csv")
            if snap:
                written.append("snapshots_oga")
        for name, r in reports:
            put(f"report_{name}.txt", r.as_text() + "\n")
        put("summary.csv", "\n".join([an.REPORT_CSV_HEADER] + [r.csv_row() for _, r in reports]) + "\n")
        os.makedirs(out_dir, exist_ok=True)
        for name in written:
            dest = os.path.join(out_dir, name)
            if os.path.isdir(dest):
                shutil.rmtree(dest)
            os.replace(os.path.join(staging, name), dest)
    finally:
        shutil.rmtree(staging, ignore_errors=True)

    if not quiet:
        print(f"dictionary={D.label} dim={D.dim} count={D.count} mu1={_fmt(D.coherence.mu1)}")
        for t, name in ((pga, "PGA"), (oga, "OGA")):
            if t is not None:
                print(f"{name}: steps={len(t)} stop={t.stop_reason.value} "
                      f"final_residual={_fmt(t.residual_at(len(t)))}")
        for name, r in reports:
            print(f"{name}: holds={r.holds}")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 2 if warnings else 0


def _coherence_text(D: Dictionary) -> str:
    c = D.coherence
    return (
        f"mu1={_fmt(c.mu1)}\nmu={_fmt(c.mu)}\nlower_frame={_fmt(c.lower_frame)}\n"
        f"upper_frame={_fmt(c.upper_frame)}\nworst_atom={c.worst_atom}\n"
    )


def cmd_coherence(D: Dictionary, quiet: bool = False) -> int:
    if not quiet:
        sys.stdout.write(_coherence_text(D))
    if not D.coherence.mu1 < 0.5:
        print("warning: mu1 >= 1/2, exact-recovery hypothesis fails", file=sys.stderr)
        return 2
    return 0


def cmd_oracle(exp: Experiment, m: int, quiet: bool = False) -> int:
    D = make_dictionary(exp)
    rep = make_signal(exp, D)
    f = synthesize(D, rep)
    err, sup = an.best_mterm_oracle(D, f, m)
    stop = StopRule(max(m, 1), exp.stop.residual_tol, exp.stop.inner_product_tol)
    pga = run_pga(D, f, stop)
    oga = run_oga(D, f, stop)
    if not quiet:
        print(f"oracle_error={_fmt(err)}")
        print(f"oracle_support={' '.join(map(str, sup))}")
        print(f"pga_residual={_fmt(pga.residual_at(m))}")
        print(f"oga_residual={_fmt(oga.residual_at(m))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="greedycoh", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override every seed in the config")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("coherence", help="print cumulative coherence of a dictionary")
    p.add_argument("dictionary", nargs="?", help="dictionary file (instead of --config)")
    common(p)
    p = sub.add_parser("run", help="run greedy algorithms and checks from a config")
    common(p)
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p = sub.add_parser("oracle", help="compare greedy residuals with the best m-term error")
    common(p)
    p.add_argument("--m", type=int, required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "coherence":
            if args.dictionary:
                D = load_dictionary(args.dictionary)
            elif args.config:
                D = make_dictionary(load_config(args.config, args.seed))
            else:
                raise ConfigError("give a dictionary file or --config")
            return cmd_coherence(D, args.quiet)
        if not args.config:
            raise ConfigError("--config is required")
        exp = load_config(args.config, args.seed)
        if args.command == "run":
            out = args.out if args.out else exp.resolve(exp.output_dir)
            return cmd_run(exp, out, args.quiet)
        return cmd_oracle(exp, args.m, args.quiet)
    except (ConfigError, GreedyError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
