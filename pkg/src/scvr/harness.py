"""Command-line front-end: configured benchmark runs with CSV traces,
parameter suggestions, a fast invariant-check suite, neighbor-embedding
runs, and step-size sweeps.

Subcommands
-----------
run           execute the algorithms listed in a JSON config, write a
              combined trace CSV
check-params  print suggested parameters, premise checks and
              query-complexity exponents for given problem sizes
verify        run the fast invariant suite; exit 0 iff everything passes
embed         normalize -> PCA -> neighbor embedding -> coordinates CSV
sweep         re-run one config over a step-size grid, keep the best

Relative output paths resolve against $SCVR_OUT_DIR when it is set.
Every error path prints one machine-parseable line ``error <CODE>:
<message>`` to stderr and exits nonzero.

Trace CSVs carry a wall_ms column.  Timing is off by default (the
column reads 0) so that identical config and seed reproduce the file
byte for byte; pass ``--timing wall`` to record real elapsed
milliseconds at the cost of that reproducibility.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time

import numpy as np

from scvr import estimators, optimizers, problems, theory, verification
from scvr.core import (
    EvaluationError,
    QueryLedger,
    SampleStream,
    SmoothnessConstants,
    sample_indices,
)
from scvr.optimizers import DivergenceError, OptimizerConfig, TraceRecord

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

TRACE_HEADER = "algorithm,epoch,inner_iter,total_queries,grad_norm_sq,objective,wall_ms"


class ConfigError(ValueError):
    pass


class CliFailure(Exception):
    def __init__(self, code: int, tag: str, message: str):
        super().__init__(message)
        self.code = code
        self.tag = tag


def _fail(code: int, tag: str, message: str):
    raise CliFailure(code, tag, message)


def _out_path(path: str) -> str:
    base = os.environ.get("SCVR_OUT_DIR", "")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------

_ALGO_FIELDS = {
    "variant", "eta", "epochs_s", "inner_k",
    "sample_a", "sample_b", "batch_b", "seed", "record_every",
}


def build_problem(block: dict):
    """Instantiate the problem described by the config's problem block."""
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError("problem: missing field 'kind'")
    kind = block["kind"]
    if kind == "affine_quadratic":
        return problems.make_affine_quadratic(
            n=int(block.get("n", 10)),
            m=int(block.get("m", 10)),
            dim_x=int(block.get("dim_x", 4)),
            dim_w=int(block.get("dim_w", 4)),
            seed=int(block.get("seed", 0)),
        )
    if kind == "nonconvex_synthetic":
        return problems.make_nonconvex_synthetic(
            n=int(block.get("n", 100)),
            m=int(block.get("m", 100)),
            dim_x=int(block.get("dim_x", 8)),
            dim_w=int(block.get("dim_w", 8)),
            seed=int(block.get("seed", 0)),
        )
    if kind == "sne":
        path = block.get("data")
        if not path:
            raise ConfigError("problem: sne needs field 'data'")
        data = problems.load_matrix(path)
        data = problems.normalize(data)
        target = int(block.get("pca_dim", 30))
        k = min(target, data.rows - 1, data.cols)
        data = problems.pca_reduce(data, k)
        return problems.build_sne(
            data, float(block.get("sigma", 1.0)), int(block.get("embed_dim", 2))
        )
    if kind == "sne_json":
        path = block.get("path")
        if not path:
            raise ConfigError("problem: sne_json needs field 'path'")
        with open(path, encoding="utf-8") as fh:
            return problems.SneProblem.from_json(fh.read())
    raise ConfigError(f"problem: unknown kind {kind!r}")


def _algo_config(entry: dict, default_seed: int, default_record: int) -> OptimizerConfig:
    unknown = set(entry) - _ALGO_FIELDS
    if unknown:
        raise ConfigError(f"algorithms: unknown field(s) {sorted(unknown)}")
    if "variant" not in entry:
        raise ConfigError("algorithms: missing field 'variant'")
    if "eta" not in entry:
        raise ConfigError(f"algorithms[{entry['variant']}]: missing field 'eta'")
    try:
        return OptimizerConfig(
            eta=float(entry["eta"]),
            epochs_s=int(entry.get("epochs_s", 1)),
            inner_k=int(entry.get("inner_k", 1)),
            variant=str(entry["variant"]),
            sample_a=int(entry.get("sample_a", 1)),
            sample_b=int(entry.get("sample_b", 1)),
            batch_b=int(entry.get("batch_b", 1)),
            seed=int(entry.get("seed", default_seed)),
            record_every=int(entry.get("record_every", default_record)),
        )
    except ValueError as exc:
        raise ConfigError(f"algorithms: {exc}") from exc


def _min_startup_cost(variant: str, m: int, n: int) -> int:
    if variant == "sgd":
        return m + 2
    return 2 * m + n  # gd's full gradient, or the epoch snapshot


def load_experiment(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        _fail(EXIT_DATA, "E_DATA", f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_CONFIG, "E_CONFIG", f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        _fail(EXIT_CONFIG, "E_CONFIG", "config root must be a JSON object")
    return cfg


def prepare_experiment(cfg: dict):
    """Validate a config dict; returns (problem, [OptimizerConfig], meta)."""
    for required in ("problem", "algorithms"):
        if required not in cfg:
            raise ConfigError(f"missing field '{required}'")
    problem = build_problem(cfg["problem"])
    seed = int(cfg.get("seed", 0))
    record_every = int(cfg.get("record_every", 1))
    algos = cfg["algorithms"]
    if not isinstance(algos, list) or not algos:
        raise ConfigError("algorithms: need at least one entry")
    configs = [_algo_config(entry, seed, record_every) for entry in algos]
    variants = [oc.variant for oc in configs]
    if len(set(variants)) != len(variants):
        raise ConfigError(
            "algorithms: each variant may appear only once per experiment "
            "(use the sweep subcommand to compare step sizes)"
        )
    budget = cfg.get("budget")
    if budget is not None:
        budget = int(budget)
        for oc in configs:
            need = _min_startup_cost(oc.variant, problem.m_inner, problem.n_outer)
            if budget <= need:
                raise ConfigError(
                    f"budget {budget} does not cover the startup cost "
                    f"{need} of variant {oc.variant}"
                )
    meta = {
        "seed": seed,
        "budget": budget,
        "output": cfg.get("output", "trace.csv"),
        "init_scale": float(cfg.get("init_scale", 0.1)),
    }
    return problem, configs, meta


def initial_point(problem, seed: int, scale: float) -> np.ndarray:
    """Deterministic start shared by all algorithms of one experiment."""
    stream = SampleStream(seed ^ 0xD1F3A5C9)
    return stream.normal_vector(problem.dim_x, scale)


def _format_float(v: float) -> str:
    return repr(float(v))


def trace_rows(variant: str, trace: list[TraceRecord], wall_ms: int = 0):
    for rec in trace:
        yield (
            f"{variant},{rec.epoch},{rec.inner_iter},{rec.total_queries},"
            f"{_format_float(rec.grad_norm_sq)},{_format_float(rec.objective)},{wall_ms}"
        )


def write_trace_csv(path: str, sections: list[tuple[str, list[TraceRecord], int]]) -> None:
    sections = sorted(sections, key=lambda s: s[0])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(TRACE_HEADER + "\n")
        for variant, trace, wall in sections:
            for row in trace_rows(variant, trace, wall):
                fh.write(row + "\n")


def run_experiment(problem, configs, meta, timing: str = "none"):
    """Run every configured algorithm; returns the CSV sections."""
    x0 = initial_point(problem, meta["seed"], meta["init_scale"])
    sections = []
    for oc in configs:
        start = time.perf_counter()
        result = optimizers.run(problem, oc, x0=x0, budget=meta["budget"])
        elapsed = int(round((time.perf_counter() - start) * 1000.0))
        wall = elapsed if timing == "wall" else 0
        sections.append((oc.variant, result.trace, wall))
    return sections


# ---------------------------------------------------------------------------
# Subcommand: run
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = load_experiment(args.config)
    if args.budget is not None:
        cfg["budget"] = args.budget
    if args.output is not None:
        cfg["output"] = args.output
    if args.seed is not None:
        cfg["seed"] = args.seed
    try:
        problem, configs, meta = prepare_experiment(cfg)
    except (ConfigError, problems.MatrixParseError, problems.ProblemConstructionError) as exc:
        code = EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_DATA
        _fail(code, "E_CONFIG" if code == EXIT_CONFIG else "E_DATA", str(exc))
    except FileNotFoundError as exc:
        _fail(EXIT_DATA, "E_DATA", str(exc))
    try:
        sections = run_experiment(problem, configs, meta, timing=args.timing)
    except DivergenceError as exc:
        _fail(EXIT_DIVERGED, "E_DIVERGED", f"run diverged: {exc}")
    except EvaluationError as exc:
        _fail(EXIT_DIVERGED, "E_DIVERGED", f"component evaluation blew up: {exc}")
    out = _out_path(meta["output"])
    write_trace_csv(out, sections)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Subcommand: check-params
# ---------------------------------------------------------------------------


def _constants_from_args(args) -> SmoothnessConstants:
    return SmoothnessConstants(
        b_g=args.bg, l_g=args.lg, b_f=args.bf, l_f_outer=args.lf_outer, l_f=args.lf
    )


def check_params_report(n: int, m: int, constants: SmoothnessConstants, b: int) -> dict:
    """Suggestions, premise diagnostics and exponents as one JSON-able dict."""
    report: dict = {"n": n, "m": m, "b": b}
    qc = theory.predict_query_complexity(n, m, b=b)
    report["m0"] = qc.m0
    report["exponents"] = {
        "scvr": qc.scvr_exponent,
        "svrg": qc.svrg_exponent,
        "minibatch_parallel_outer": qc.minibatch_parallel_outer_exponent,
        "minibatch_parallel_full": qc.minibatch_parallel_full_exponent,
        "minibatch_nonparallel": qc.minibatch_nonparallel_exponent,
    }
    report["alpha"] = {"scvr": qc.scvr_alpha, "svrg": qc.svrg_alpha}
    report["recommendation"] = qc.better
    report["suggestions"] = {}
    for algo, recursion in (
        ("scvr1", theory.recursion_scvr1),
        ("scvr2", theory.recursion_scvr2),
        ("minibatch", theory.recursion_minibatch),
    ):
        params = theory.suggest_parameters(
            n, m, constants, algorithm=algo, b=(b if algo == "minibatch" else 1)
        )
        diag = recursion(params, constants)
        report["suggestions"][algo] = {
            **dataclasses.asdict(params),
            "c0h": diag.c0h,
            "u_min": diag.u_min,
            "u_max": diag.u_max,
            "premise_ok": diag.premise_ok,
        }
    return report


def cmd_check_params(args) -> int:
    if args.n < 2:
        _fail(EXIT_CONFIG, "E_ARGS", "n must be at least 2 (the size ratio m0 "
              "is undefined at n=1)")
    if args.m < 1:
        _fail(EXIT_CONFIG, "E_ARGS", "m must be at least 1")
    constants = _constants_from_args(args)
    report = check_params_report(args.n, args.m, constants, args.b)
    text = json.dumps(report, indent=2)
    if args.output:
        out = _out_path(args.output)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"wrote {out}")
    else:
        print(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Subcommand: verify  (fast invariant suite)
# ---------------------------------------------------------------------------


def _check_snapshot_identities() -> tuple[bool, str]:
    problem = problems.make_affine_quadratic(n=4, m=5, dim_x=3, dim_w=3, seed=11)
    stream = SampleStream(7)
    ledger = QueryLedger()
    x = np.array([0.3, -1.2, 0.8])
    snap = estimators.take_snapshot(problem, x, ledger)
    worst = 0.0
    for _ in range(20):
        batch = sample_indices(stream, problem.m_inner, 3)
        g_hat = estimators.estimate_inner(problem, x, snap, batch, ledger)
        jac_hat = estimators.estimate_inner_jacobian(problem, x, snap, batch, ledger)
        i = stream.randrange(problem.n_outer) + 1
        j = stream.randrange(problem.m_inner) + 1
        for est in (
            estimators.grad_scvr1(problem, x, snap, g_hat, i, j, ledger),
            estimators.grad_scvr2(problem, snap, g_hat, jac_hat, i, ledger),
            estimators.grad_minibatch_v1(problem, snap, g_hat, jac_hat, [i], ledger),
            estimators.grad_minibatch_v2(problem, x, snap, g_hat, batch, [i], ledger),
        ):
            worst = max(worst, float(np.abs(est.direction - snap.grad_tilde).max()))
    return worst <= 1e-12, f"max snapshot deviation {worst:.2e}"


def _check_inner_unbiasedness() -> tuple[bool, str]:
    problem = problems.make_affine_quadratic(n=3, m=4, dim_x=3, dim_w=3, seed=3)
    ledger = QueryLedger()
    snap = estimators.take_snapshot(problem, np.zeros(3), ledger)
    x = np.array([0.5, -0.7, 1.1])
    mean_g = verification.exhaustive_inner_mean(problem, x, snap, a=2)
    exact_g = sum(problem.inner_component(j, x) for j in range(1, 5)) / 4.0
    mean_j = verification.exhaustive_jacobian_mean(problem, x, snap, b=1)
    exact_j = sum(problem.inner_component_jacobian(j, x) for j in range(1, 5)) / 4.0
    err = max(
        float(np.abs(mean_g - exact_g).max()), float(np.abs(mean_j - exact_j).max())
    )
    return err <= 1e-12, f"max enumeration error {err:.2e}"


def _check_grad_conditional_mean() -> tuple[bool, str]:
    problem = problems.make_curved_inner(dim_x=3, dim_w=3, n=3, seed=5)
    ledger = QueryLedger()
    snap = estimators.take_snapshot(problem, np.zeros(3), ledger)
    x = np.array([0.4, -0.2, 0.6])
    g_hat = estimators.estimate_inner(problem, x, snap, [2], ledger)
    mean = verification.exhaustive_grad_mean(problem, x, snap, g_hat, "scvr1")
    shadow = QueryLedger()
    from scvr.core import inner_jacobian_full, outer_gradient_full

    expected = inner_jacobian_full(problem, x, shadow).T @ outer_gradient_full(
        problem, g_hat, shadow
    )
    err = float(np.abs(mean - expected).max())
    return err <= 1e-12, f"conditional-mean error {err:.2e}"


def _check_query_accounting() -> tuple[bool, str]:
    problem = problems.make_affine_quadratic(n=5, m=4, dim_x=2, dim_w=2, seed=2)
    grid = [
        ("scvr1", 2, 3, 2, 1, 1),
        ("scvr2", 1, 2, 1, 1, 1),
        ("minibatch_v1", 1, 1, 1, 1, 1),
        ("minibatch_v2", 2, 2, 2, 3, 2),
        ("svrg", 2, 2, 1, 1, 1),
    ]
    for variant, s, k, a, bj, bo in grid:
        cfg = OptimizerConfig(
            eta=0.0, epochs_s=s, inner_k=k, variant=variant,
            sample_a=a, sample_b=bj, batch_b=bo, seed=1, record_every=10_000,
        )
        result = optimizers.run(problem, cfg)
        want = optimizers.expected_total_queries(
            variant, s, k, problem.m_inner, problem.n_outer, a, bj, bo
        )
        if result.ledger.total != want:
            return False, f"{variant}: ledger {result.ledger.total} != formula {want}"
    return True, "ledger totals match the closed-form counts"


def _check_second_moment_bounds() -> tuple[bool, str]:
    balanced = problems.make_balanced_affine(m_pairs=2, dim_x=3, dim_w=3, seed=6)
    ledger = QueryLedger()
    x_tilde = np.zeros(3)
    snap = estimators.take_snapshot(balanced, x_tilde, ledger)
    x = np.array([0.9, -0.4, 0.2])
    dist_sq = float(((x - x_tilde) ** 2).sum())
    b_g = balanced.constants.b_g
    for a in (1, 2, 4):
        moment = verification.empirical_second_moment(
            verification.InnerDeviationSampler(balanced, x, snap, a)
        )
        if not moment <= b_g * b_g / a * dist_sq:
            return False, f"inner moment bound violated at A={a}"
    curved = problems.make_curved_inner(seed=8)
    ledger2 = QueryLedger()
    snap2 = estimators.take_snapshot(curved, x_tilde, ledger2)
    l_g = curved.constants.l_g
    for b in (1, 2, 4):
        moment = verification.empirical_second_moment(
            verification.JacobianDeviationSampler(curved, x, snap2, b)
        )
        if not moment <= l_g * l_g / b * dist_sq:
            return False, f"jacobian moment bound violated at B={b}"
    return True, "second-moment bounds hold at A,B in {1,2,4}"


def _check_recursion_closed_forms() -> tuple[bool, str]:
    constants = SmoothnessConstants(b_g=1.0, l_g=1.0, b_f=1.0, l_f_outer=1.0, l_f=1.0)
    worst = 0.0
    for algo, recursion in (
        ("scvr1", theory.recursion_scvr1),
        ("scvr2", theory.recursion_scvr2),
        ("minibatch", theory.recursion_minibatch),
    ):
        params = theory.suggest_parameters(1000, 1000, constants, algorithm=algo, b=2)
        diag = recursion(params, constants)
        rel = abs(diag.c_sequence[0] - diag.c0_closed) / max(abs(diag.c0_closed), 1e-300)
        worst = max(worst, rel)
    return worst <= 1e-10, f"max closed-form mismatch {worst:.2e}"


VERIFY_CHECKS = (
    ("snapshot_identities", _check_snapshot_identities),
    ("inner_unbiasedness", _check_inner_unbiasedness),
    ("grad_conditional_mean", _check_grad_conditional_mean),
    ("query_accounting", _check_query_accounting),
    ("second_moment_bounds", _check_second_moment_bounds),
    ("recursion_closed_forms", _check_recursion_closed_forms),
)


def run_verify_checks() -> list[tuple[str, bool, str]]:
    results = []
    for name, fn in VERIFY_CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results


def cmd_verify(_args) -> int:
    results = run_verify_checks()
    all_ok = True
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        all_ok &= ok
    return EXIT_OK if all_ok else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# Subcommand: embed
# ---------------------------------------------------------------------------


def cmd_embed(args) -> int:
    try:
        data = problems.load_matrix(args.data)
    except FileNotFoundError:
        _fail(EXIT_DATA, "E_DATA", f"data file not found: {args.data}")
    except problems.MatrixParseError as exc:
        _fail(EXIT_DATA, "E_DATA", str(exc))
    try:
        data = problems.normalize(data)
        k = min(args.pca_dim, data.rows - 1, data.cols)
        data = problems.pca_reduce(data, k)
        problem = problems.build_sne(data, args.sigma, args.dim)
    except (ValueError, problems.ProblemConstructionError) as exc:
        _fail(EXIT_CONFIG, "E_CONFIG", str(exc))
    n = problem.n_points
    batch = args.batch if args.batch is not None else math.ceil(n ** (2.0 / 3.0))
    sample = args.sample if args.sample is not None else max(1, math.ceil(n ** 0.4))
    try:
        cfg = OptimizerConfig(
            eta=args.eta,
            epochs_s=args.epochs,
            inner_k=args.steps,
            variant=args.algorithm,
            sample_a=sample,
            sample_b=sample,
            batch_b=batch,
            seed=args.seed,
            record_every=max(1, args.steps // 4),
        )
    except ValueError as exc:
        _fail(EXIT_CONFIG, "E_CONFIG", str(exc))
    x0 = initial_point(problem, args.seed, 1e-2)
    try:
        result = optimizers.run(problem, cfg, x0=x0, budget=args.budget)
    except DivergenceError as exc:
        _fail(EXIT_DIVERGED, "E_DIVERGED", f"embedding run diverged: {exc}")
    coords = result.x_last.reshape(n, args.dim)
    out = _out_path(args.output)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        for row in coords:
            fh.write(",".join(_format_float(v) for v in row) + "\n")
    first, last = result.trace[0], result.trace[-1]
    print(
        f"wrote {out} ({n} rows x {args.dim});"
        f" objective {first.objective:.6g} -> {last.objective:.6g}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Subcommand: sweep
# ---------------------------------------------------------------------------


def sweep_experiment(problem, configs, meta, etas: list[float]):
    """Run each algorithm once per step size; pick the step with the best
    final gradient norm.  Diverged steps are reported, not fatal."""
    x0 = initial_point(problem, meta["seed"], meta["init_scale"])
    outcome: dict = {}
    best_sections = []
    for oc in configs:
        per_eta = []
        best = None
        for eta in etas:
            candidate = dataclasses.replace(oc, eta=eta)
            try:
                result = optimizers.run(problem, candidate, x0=x0, budget=meta["budget"])
                final = result.trace[-1].grad_norm_sq
                per_eta.append({"eta": eta, "final_grad_norm_sq": final, "diverged": False})
                if best is None or final < best[1]:
                    best = (eta, final, result)
            except DivergenceError:
                per_eta.append({"eta": eta, "final_grad_norm_sq": None, "diverged": True})
        if best is None:
            raise CliFailure(
                EXIT_DIVERGED, "E_DIVERGED",
                f"every step size diverged for variant {oc.variant}",
            )
        outcome[oc.variant] = {"best_eta": best[0], "grid": per_eta}
        best_sections.append((oc.variant, best[2].trace, 0))
    return outcome, best_sections


def cmd_sweep(args) -> int:
    cfg = load_experiment(args.config)
    if args.budget is not None:
        cfg["budget"] = args.budget
    try:
        etas = [float(v) for v in args.etas.split(",") if v]
    except ValueError:
        _fail(EXIT_CONFIG, "E_CONFIG", f"cannot parse eta grid {args.etas!r}")
    if not etas:
        _fail(EXIT_CONFIG, "E_CONFIG", "eta grid is empty")
    try:
        problem, configs, meta = prepare_experiment(cfg)
    except (ConfigError, problems.ProblemConstructionError) as exc:
        _fail(EXIT_CONFIG, "E_CONFIG", str(exc))
    except (problems.MatrixParseError, FileNotFoundError) as exc:
        _fail(EXIT_DATA, "E_DATA", str(exc))
    outcome, best_sections = sweep_experiment(problem, configs, meta, etas)
    out = _out_path(meta["output"])
    write_trace_csv(out, best_sections)
    report_path = _out_path(args.report) if args.report else None
    text = json.dumps(outcome, indent=2)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scvr",
        description="Variance-reduced composition optimization benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run configured algorithms, write trace CSV")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    p_run.add_argument("--budget", type=int, default=None, help="query budget override")
    p_run.add_argument("--output", default=None, help="trace CSV path override")
    p_run.add_argument("--seed", type=int, default=None, help="seed override")
    p_run.add_argument(
        "--timing", choices=("none", "wall"), default="none",
        help="wall_ms column source (default none keeps traces byte-reproducible)",
    )
    p_run.set_defaults(fn=cmd_run)

    p_chk = sub.add_parser("check-params", help="suggest parameters and exponents")
    p_chk.add_argument("--n", type=int, required=True, help="outer component count")
    p_chk.add_argument("--m", type=int, required=True, help="inner component count")
    p_chk.add_argument("--b", type=int, default=1, help="outer mini-batch size")
    p_chk.add_argument("--bg", type=float, default=1.0, help="inner Jacobian bound")
    p_chk.add_argument("--lg", type=float, default=1.0, help="inner Jacobian Lipschitz")
    p_chk.add_argument("--bf", type=float, default=1.0, help="outer gradient bound")
    p_chk.add_argument("--lf-outer", dest="lf_outer", type=float, default=1.0,
                       help="outer gradient Lipschitz")
    p_chk.add_argument("--lf", type=float, default=1.0, help="composite smoothness")
    p_chk.add_argument("--output", default=None, help="write the JSON report here")
    p_chk.set_defaults(fn=cmd_check_params)

    p_ver = sub.add_parser("verify", help="run the fast invariant suite")
    p_ver.set_defaults(fn=cmd_verify)

    p_emb = sub.add_parser("embed", help="neighbor embedding of a CSV dataset")
    p_emb.add_argument("--data", required=True, help="CSV matrix, one sample per row")
    p_emb.add_argument("--sigma", type=float, default=1.0, help="data-side bandwidth")
    p_emb.add_argument("--dim", type=int, default=2, help="embedding dimension")
    p_emb.add_argument("--pca-dim", dest="pca_dim", type=int, default=30)
    p_emb.add_argument("--algorithm", default="minibatch_v1", choices=optimizers.VARIANTS)
    p_emb.add_argument("--eta", type=float, default=0.02)
    p_emb.add_argument("--epochs", type=int, default=30)
    p_emb.add_argument("--steps", type=int, default=40)
    p_emb.add_argument("--sample", type=int, default=None, help="inner batch size")
    p_emb.add_argument("--batch", type=int, default=None, help="outer batch size")
    p_emb.add_argument("--budget", type=int, default=None)
    p_emb.add_argument("--seed", type=int, default=0)
    p_emb.add_argument("--output", default="embedding.csv")
    p_emb.set_defaults(fn=cmd_embed)

    p_swp = sub.add_parser("sweep", help="step-size sweep, keep the best trace")
    p_swp.add_argument("--config", required=True)
    p_swp.add_argument("--etas", required=True, help="comma-separated step sizes")
    p_swp.add_argument("--budget", type=int, default=None)
    p_swp.add_argument("--report", default=None, help="JSON sweep report path")
    p_swp.set_defaults(fn=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliFailure as exc:
        print(f"error {exc.tag}: {exc}", file=sys.stderr)
        return exc.code


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
