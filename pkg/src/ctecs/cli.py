"""Experiment harness: generate circuit instances, run the sampling
pipelines, compare against the dense oracle, and emit reproducible JSON
reports.

Subcommands: gen, exact, fourier, sample, verify, report.  Every run is
driven by a single 64-bit master seed; submodule streams derive from it by
labeled splitting (see ``seeding``), so reports are reproducible across
thread counts.  Exit codes: 0 success, 2 usage error, 3 resource cap
exceeded, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import _bits, oracle, seeding
from .circuits import (
    FAMILIES,
    IQP,
    Circuit,
    CtEcsDecomposition,
    decomposition_from_json_dict,
    decomposition_to_json_dict,
    random_family_instance,
)
from .ecs import dense_from_columns, ecs_for
from .errors import ResourceLimitError, ValidationError
from .fourier import (
    EstimatedCoefficients,
    EstimatorConfig,
    ExactCoefficients,
    build_low_degree_table,
    exact_fourier_identity_check,
)
from .noise import NoiseSpec, noise_operator_apply
from .sampler import (
    ModelBPlan,
    enumerate_alg_distribution,
    negative_mass,
    simulate_marginal,
    simulate_model_a,
    simulate_model_b,
)

REPORT_SCHEMA = "ctecs-report/1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RESOURCE = 3
EXIT_VERIFY = 4


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(value):
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON-serializable: {type(value)}")


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, default=_jsonable)
    if out:
        _write_atomic(Path(out), text)
    else:
        print(text)


def _load_decomposition(path: str) -> CtEcsDecomposition:
    with open(path) as handle:
        data = json.load(handle)
    if "family" not in data:
        raise ValidationError(
            f"{path} is a plain circuit file; this command needs a family file")
    return decomposition_from_json_dict(data)


def _load_circuit(path: str) -> Circuit:
    with open(path) as handle:
        data = json.load(handle)
    if "family" in data:
        return decomposition_from_json_dict(data).circuit
    return Circuit.from_json_dict(data)


# --- gen -------------------------------------------------------------------------

def cmd_gen(args) -> int:
    knobs = {}
    if args.gate_count is not None:
        knobs["gate_count"] = args.gate_count
    if args.depth is not None:
        knobs["depth"] = args.depth
    out_dir = Path(args.out_dir)
    written = []
    for i in range(args.count):
        rng = seeding.derive_rng(args.seed, seeding.LABEL_GENERATE, i)
        decomp = random_family_instance(args.family, args.n, rng, **knobs)
        name = f"{args.family.lower()}_{args.n}q_s{args.seed}_{i:03d}.json"
        _write_atomic(out_dir / name,
                      json.dumps(decomposition_to_json_dict(decomp), indent=2,
                                 sort_keys=True))
        written.append(str(out_dir / name))
    _emit({
        "schema": REPORT_SCHEMA,
        "command": "gen",
        "family": args.family,
        "n": args.n,
        "count": args.count,
        "seed": args.seed,
        "files": written,
    }, args.out)
    return EXIT_OK


# --- exact -----------------------------------------------------------------------

def _noise_from_args(args) -> NoiseSpec | None:
    if args.epsilon is None:
        return None
    rates = [float(tok) for tok in str(args.epsilon).split(",")]
    if len(rates) == 1:
        return NoiseSpec.uniform(rates[0])
    return NoiseSpec.per_qubit(rates)


def cmd_exact(args) -> int:
    circuit = _load_circuit(args.circuit)
    if circuit.n > args.dense_cap:
        raise ResourceLimitError(
            f"circuit has {circuit.n} qubits; the dense cap is {args.dense_cap}")
    p = oracle.output_distribution(circuit, dense_cap=args.dense_cap)
    report = {
        "schema": REPORT_SCHEMA,
        "command": "exact",
        "circuit": args.circuit,
        "n": circuit.n,
        "size": circuit.size,
        "depth": circuit.depth(),
        "alpha": oracle.anti_concentration_alpha(p),
        "p": p.to_json_dict(),
    }
    if circuit.n <= 12:
        coeffs = oracle.fourier_transform(p)
        report["fourier_coefficients"] = [float(v) for v in coeffs]
    noise = _noise_from_args(args)
    if noise is not None:
        noisy = oracle.apply_depolarizing_exact(p, noise, n=circuit.n)
        report["noise"] = noise.to_json_dict()
        report["p_noisy"] = noisy.to_json_dict()
    _emit(report, args.out)
    return EXIT_OK


# --- fourier ---------------------------------------------------------------------

def _source_from_args(decomp, args, dense_cap: int):
    if args.source == "exact":
        return ExactCoefficients(decomp, dense_cap=dense_cap)
    if args.tau is not None:
        cfg = EstimatorConfig.from_accuracy(args.tau, args.eta, seed=args.seed)
    else:
        cfg = EstimatorConfig(batch_size=args.batch_size,
                              batch_count=args.batch_count, seed=args.seed)
    return EstimatedCoefficients(decomp, cfg, max_workers=args.threads)


def cmd_fourier(args) -> int:
    decomp = _load_decomposition(args.circuit)
    source = _source_from_args(decomp, args, args.dense_cap)
    rng = seeding.derive_rng(args.seed, seeding.LABEL_TABLE)
    started = time.perf_counter()
    table = build_low_degree_table(decomp, args.c, source, rng,
                                   mask_budget=args.mask_budget)
    elapsed = time.perf_counter() - started
    report = {
        "schema": REPORT_SCHEMA,
        "command": "fourier",
        "circuit": args.circuit,
        "n": decomp.n,
        "c": args.c,
        "mask_count": len(table.masks),
        "source": source.describe(),
        "seed": args.seed,
        "table": table.to_json_dict(),
        "timings": {"table_s": elapsed},
    }
    if args.compare_oracle:
        if decomp.n > args.dense_cap:
            raise ResourceLimitError(
                f"oracle comparison needs n <= {args.dense_cap}")
        exact = ExactCoefficients(decomp, dense_cap=args.dense_cap)
        scale = 0.5 ** decomp.n
        errs = [
            abs(v - exact.expectation(int(m), rng) * scale)
            for m, v in zip(table.masks, table.values)
        ]
        report["oracle_comparison"] = {
            "max_abs_error": max(errs),
            "mean_abs_error": float(np.mean(errs)),
        }
    _emit(report, args.out)
    return EXIT_OK


# --- sample ----------------------------------------------------------------------

def _resolve_alpha(spec, decomp, dense_cap: int) -> tuple[float, str]:
    if isinstance(spec, dict) and "assume" in spec:
        return float(spec["assume"]), "assumed"
    p = oracle.output_distribution(decomp.circuit, dense_cap=dense_cap)
    return oracle.anti_concentration_alpha(p), "measured"


def _source_from_config(decomp, cfg: dict, seed: int, threads: int, dense_cap: int):
    src = cfg.get("source", {"type": "exact"})
    if src.get("type", "exact") == "exact":
        return ExactCoefficients(decomp, dense_cap=dense_cap)
    if "tau" in src:
        est = EstimatorConfig.from_accuracy(src["tau"], src.get("eta", 0.05),
                                            seed=seed)
    else:
        est = EstimatorConfig(batch_size=int(src.get("batch_size", 10_000)),
                              batch_count=int(src.get("batch_count", 9)),
                              seed=seed)
    return EstimatedCoefficients(decomp, est, max_workers=threads)


def cmd_sample(args) -> int:
    with open(args.config) as handle:
        config = json.load(handle)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    if "instance" in config:
        decomp = decomposition_from_json_dict(config["instance"])
    else:
        decomp = _load_decomposition(config["circuit"])
    mode = config.get("mode", "A")
    num_samples = int(config.get("num_samples", 1000))
    alpha_spec = config.get("alpha", {"measure": True})
    source = _source_from_config(decomp, config, seed, args.threads,
                                 args.dense_cap)
    rng = seeding.derive_rng(seed, seeding.LABEL_SAMPLE)
    if mode == "A":
        alpha, alpha_how = _resolve_alpha(alpha_spec, decomp, args.dense_cap)
        result = simulate_model_a(
            decomp, alpha, float(config["delta"]), float(config["lambda"]),
            source, rng, num_samples,
            c_max=int(config.get("c_max", 4)),
            true_epsilon=config.get("epsilon"),
            mask_budget=config.get("mask_budget"),
        )
    elif mode == "B":
        alpha, alpha_how = _resolve_alpha(alpha_spec, decomp, args.dense_cap)
        by_qubit = {int(j): float(v)
                    for j, v in config.get("lambda_by_qubit", {}).items()}
        plan = ModelBPlan(float(config["lambda_min"]),
                          tuple(by_qubit.items()))
        eps = config.get("epsilon")
        result = simulate_model_b(
            decomp, alpha, float(config["delta"]), plan, source, rng,
            num_samples,
            c_max=int(config.get("c_max", 4)),
            true_epsilon_min=min(eps) if isinstance(eps, list) else eps,
            mask_budget=config.get("mask_budget"),
        )
    elif mode == "marginal":
        alpha, alpha_how = None, "unused"
        result = simulate_marginal(
            decomp, config["measured"], source, rng, num_samples)
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    report = {
        "schema": REPORT_SCHEMA,
        "command": "sample",
        "config": config,
        "seed": seed,
        "alpha": alpha,
        "alpha_how": alpha_how,
        "report": result.report,
    }
    if args.verify:
        report["verification"] = _verify_sampling(decomp, config, result,
                                                  args.dense_cap)
    if args.samples_out:
        _write_atomic(Path(args.samples_out),
                      "\n".join(result.sample_strings()) + "\n")
        report["samples_file"] = args.samples_out
    else:
        report["samples"] = result.sample_strings()
    _emit(report, args.out)
    return EXIT_OK


def _verify_sampling(decomp, config: dict, result, dense_cap: int) -> dict:
    """Compare the run against the dense oracle (small n only)."""
    n = decomp.n
    mode = config.get("mode", "A")
    out: dict = {}
    if mode == "marginal":
        if n > dense_cap:
            raise ResourceLimitError(f"verification needs n <= {dense_cap}")
        p = oracle.output_distribution(decomp.circuit, dense_cap=dense_cap)
        target = oracle.marginal_distribution(p, config["measured"])
        alg = enumerate_alg_distribution(result.table)
        out["l1_enumerated_vs_dense"] = oracle.l1_distance(alg, target)
        emp = oracle.empirical_distribution(result.samples, len(config["measured"]))
        out["l1_empirical_vs_dense"] = oracle.l1_distance(emp, target)
        return out
    eps = config.get("epsilon")
    if eps is None:
        out["note"] = "no true epsilon in config; oracle comparison skipped"
        return out
    if n > dense_cap:
        raise ResourceLimitError(f"verification needs n <= {dense_cap}")
    p = oracle.output_distribution(decomp.circuit, dense_cap=dense_cap)
    spec = NoiseSpec.per_qubit(eps) if isinstance(eps, list) else NoiseSpec.uniform(eps)
    target = oracle.apply_depolarizing_exact(p, spec, n=n)
    alg = enumerate_alg_distribution(result.table)
    if mode == "B":
        deltas = ModelBPlan(
            float(config["lambda_min"]),
            tuple((int(j), float(v))
                  for j, v in config.get("lambda_by_qubit", {}).items()),
        ).residual_deltas(n)
        vec = alg.p
        for j, dj in enumerate(deltas):
            vec = noise_operator_apply(vec, j, float(dj), n)
        alg = oracle.DistVector(n, vec)
    out["l1_enumerated_vs_dense"] = oracle.l1_distance(alg, target)
    emp = oracle.empirical_distribution(result.samples, n)
    out["l1_empirical_vs_dense"] = oracle.l1_distance(emp, target)
    out["negative_mass_of_q"] = negative_mass(result.table)
    bound = result.report.get("l1_bound", float(config["delta"]))
    out["l1_target"] = bound
    out["within_target"] = out["l1_enumerated_vs_dense"] <= bound
    return out


# --- verify ----------------------------------------------------------------------

def _suite_fourier_identity(seed: int, dense_cap: int) -> dict:
    checks = []
    for family in FAMILIES:
        for n in (2, 3, 4, 5):
            for i in range(3):
                rng = seeding.derive_rng(seed, seeding.LABEL_VERIFY, n, i)
                decomp = random_family_instance(family, n, rng)
                worst = 0.0
                for mask in range(1 << n):
                    lhs, rhs = exact_fourier_identity_check(decomp.circuit, mask)
                    worst = max(worst, abs(lhs - rhs))
                checks.append({
                    "name": f"{family}/n={n}/instance={i}",
                    "max_abs_difference": worst,
                    "ok": worst <= 1e-10,
                })
    return _suite_report("fourier-identity", checks)


def _suite_noise_algebra(seed: int, dense_cap: int) -> dict:
    rng = seeding.derive_rng(seed, seeding.LABEL_VERIFY)
    checks = []
    for trial in range(20):
        n = int(rng.integers(1, 9))
        p = rng.random(1 << n)
        p /= p.sum()
        spec = NoiseSpec.per_qubit(rng.uniform(0.05, 0.95, n))
        # internal dual-route self-check raises on disagreement
        oracle.apply_depolarizing_exact(p, spec, n=n)
        f = rng.standard_normal(1 << n)
        j = int(rng.integers(n))
        delta = float(rng.uniform(0.0, 1.0))
        contracted = noise_operator_apply(f, j, delta, n)
        ok = np.abs(contracted).sum() <= np.abs(f).sum() + 1e-12
        checks.append({"name": f"trial={trial}/n={n}", "ok": bool(ok)})
    return _suite_report("noise-algebra", checks)


def _suite_noise_factorization(seed: int, dense_cap: int) -> dict:
    rng = seeding.derive_rng(seed, seeding.LABEL_VERIFY)
    checks = []
    for trial in range(30):
        n = int(rng.integers(1, 9))
        p = rng.random(1 << n)
        p /= p.sum()
        rates = rng.uniform(0.05, 0.95, n)
        lhs, rhs = oracle.model_b_factorization_check(p, rates)
        err = float(np.abs(lhs - rhs).sum())
        checks.append({"name": f"trial={trial}/n={n}", "l1": err,
                       "ok": err <= 1e-9})
    return _suite_report("noise-factorization", checks)


def _suite_ecs(seed: int, dense_cap: int) -> dict:
    checks = []
    for family in FAMILIES:
        for i in range(3):
            rng = seeding.derive_rng(seed, seeding.LABEL_VERIFY, i)
            n = int(rng.integers(2, 6))
            decomp = random_family_instance(family, n, rng)
            v_dense = oracle.circuit_unitary(decomp.v_block)
            worst = 0.0
            for mask in range(1, 1 << n):
                if _bits.mask_weight(mask) > 3:
                    continue
                op = ecs_for(decomp, mask)
                zs = np.diag([
                    (-1.0) ** _bits.mask_weight(mask & ix)
                    for ix in range(1 << n)]).astype(complex)
                target = v_dense.conj().T @ zs @ v_dense
                got = dense_from_columns(op)
                worst = max(worst, float(np.max(np.abs(got - target))))
                sq = got @ got
                worst = max(worst, float(np.max(np.abs(sq - np.eye(1 << n)))))
            checks.append({"name": f"{family}/instance={i}/n={n}",
                           "max_abs_error": worst, "ok": worst <= 1e-9})
    return _suite_report("ecs", checks)


def _suite_sampler_fix(seed: int, dense_cap: int) -> dict:
    from .fourier import FourierTable

    rng = seeding.derive_rng(seed, seeding.LABEL_VERIFY)
    checks = []
    for trial in range(25):
        n = int(rng.integers(1, 9))
        c = int(rng.integers(0, n + 1))
        entries = {0: 0.5 ** n}
        for mask in _bits.masks_up_to_weight(n, c):
            if mask and rng.random() < 0.5:
                entries[mask] = float(rng.normal(scale=0.5 ** n))
        table = FourierTable(n, c, entries)
        q = table.dense_values()
        alg = enumerate_alg_distribution(table).p
        gap = abs(np.abs(q - alg).sum() - 2.0 * (-q[q < 0].sum()))
        checks.append({"name": f"trial={trial}/n={n}", "identity_gap": float(gap),
                       "ok": gap <= 1e-9})
    return _suite_report("sampler-fix", checks)


def _suite_iqp_input_noise(seed: int, dense_cap: int) -> dict:
    checks = []
    for i in range(6):
        rng = seeding.derive_rng(seed, seeding.LABEL_VERIFY, i)
        n = int(rng.integers(2, 7))
        decomp = random_family_instance(IQP, n, rng)
        p = oracle.output_distribution(decomp.circuit)
        eps = rng.uniform(0.05, 0.95, n) if i % 2 else np.full(n, float(rng.uniform(0.05, 0.95)))
        via_input = oracle.noisy_input_distribution_iqp(decomp, eps)
        via_output = oracle.apply_depolarizing_exact(p, NoiseSpec.per_qubit(eps), n=n)
        err = oracle.l1_distance(via_input, via_output)
        checks.append({"name": f"instance={i}/n={n}", "l1": err,
                       "ok": err <= 1e-10})
    return _suite_report("iqp-input-noise", checks)


_SUITES = {
    "fourier-identity": _suite_fourier_identity,
    "noise-algebra": _suite_noise_algebra,
    "noise-factorization": _suite_noise_factorization,
    "lemma9": _suite_noise_factorization,  # alias kept for script compatibility
    "ecs": _suite_ecs,
    "sampler-fix": _suite_sampler_fix,
    "iqp-input-noise": _suite_iqp_input_noise,
}


def _suite_report(name: str, checks: list[dict]) -> dict:
    return {"suite": name, "ok": all(c["ok"] for c in checks), "checks": checks}


def cmd_verify(args) -> int:
    names = list(_SUITES) if args.suite == "all" else [args.suite]
    for name in names:
        if name not in _SUITES:
            raise ValidationError(
                f"unknown suite {name!r}; choose from {sorted(_SUITES)} or 'all'")
    results = []
    for name in names:
        result = _SUITES[name](args.seed, args.dense_cap)
        results.append(result)
        for check in result["checks"]:
            status = "pass" if check["ok"] else "FAIL"
            print(f"[{status}] {name}: {check['name']}", file=sys.stderr)
    report = {
        "schema": REPORT_SCHEMA,
        "command": "verify",
        "seed": args.seed,
        "suites": results,
        "ok": all(r["ok"] for r in results),
    }
    _emit(report, args.out)
    return EXIT_OK if report["ok"] else EXIT_VERIFY


# --- report ----------------------------------------------------------------------

def cmd_report(args) -> int:
    rows = []
    alphas = []
    for path in args.files:
        with open(path) as handle:
            data = json.load(handle)
        row = {"file": path, "command": data.get("command")}
        if data.get("command") == "exact":
            row["n"] = data.get("n")
            row["alpha"] = data.get("alpha")
            alphas.append(data["alpha"])
        if data.get("command") == "sample":
            run = data.get("report", {})
            row.update({
                "model": run.get("model"),
                "n": run.get("n"),
                "c_used": run.get("c_used"),
                "mask_count": run.get("mask_count"),
            })
            if "verification" in data:
                row["l1_enumerated_vs_dense"] = data["verification"].get(
                    "l1_enumerated_vs_dense")
        if data.get("command") == "verify":
            row["ok"] = data.get("ok")
        rows.append(row)
    report = {"schema": REPORT_SCHEMA, "command": "report", "rows": rows}
    if alphas:
        report["alpha_summary"] = {
            "count": len(alphas),
            "mean": float(np.mean(alphas)),
            "min": float(np.min(alphas)),
            "max": float(np.max(alphas)),
        }
    _emit(report, args.out)
    return EXIT_OK


# --- parser ----------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctecs",
        description="noisy tractable-circuit sampling harness")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="master seed (default 0 or the config's seed)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for estimator batches")
    common.add_argument("--dense-cap", type=int, default=oracle.DENSE_CAP,
                        help="dense-oracle qubit cap")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", parents=[common],
                           help="generate random family instances")
    p_gen.add_argument("--family", required=True, choices=FAMILIES)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--count", type=int, default=1)
    p_gen.add_argument("--gate-count", type=int, default=None)
    p_gen.add_argument("--depth", type=int, default=None,
                       help="layer count (ConstantDepth only)")
    p_gen.add_argument("--out-dir", default=".")
    p_gen.add_argument("--out", default=None, help="summary report path")
    p_gen.set_defaults(func=cmd_gen)

    p_exact = sub.add_parser("exact", parents=[common], help="dense oracle report for a circuit")
    p_exact.add_argument("--circuit", required=True)
    p_exact.add_argument("--epsilon", default=None,
                         help="uniform rate, or comma-separated per-qubit rates")
    p_exact.add_argument("--out", default=None)
    p_exact.set_defaults(func=cmd_exact)

    p_fourier = sub.add_parser("fourier", parents=[common], help="build a low-degree table")
    p_fourier.add_argument("--circuit", required=True, help="family JSON file")
    p_fourier.add_argument("--c", type=int, required=True)
    p_fourier.add_argument("--source", choices=("exact", "estimator"),
                           default="exact")
    p_fourier.add_argument("--batch-size", type=int, default=10_000)
    p_fourier.add_argument("--batch-count", type=int, default=9)
    p_fourier.add_argument("--tau", type=float, default=None)
    p_fourier.add_argument("--eta", type=float, default=0.05)
    p_fourier.add_argument("--mask-budget", type=int, default=100_000)
    p_fourier.add_argument("--compare-oracle", action="store_true")
    p_fourier.add_argument("--out", default=None)
    p_fourier.set_defaults(func=cmd_fourier)

    p_sample = sub.add_parser("sample", parents=[common], help="run a sampling pipeline")
    p_sample.add_argument("--config", required=True)
    p_sample.add_argument("--verify", action="store_true",
                          help="compare against the dense oracle (small n)")
    p_sample.add_argument("--samples-out", default=None,
                          help="write newline-delimited bitstrings here")
    p_sample.add_argument("--out", default=None)
    p_sample.set_defaults(func=cmd_sample)

    p_verify = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    p_verify.add_argument("--suite", required=True,
                          help=f"one of {sorted(_SUITES)} or 'all'")
    p_verify.add_argument("--out", default=None)
    p_verify.set_defaults(func=cmd_verify)

    p_report = sub.add_parser("report", parents=[common], help="summarize report files")
    p_report.add_argument("files", nargs="+")
    p_report.add_argument("--out", default=None)
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.seed is None and args.command != "sample":
        args.seed = 0
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
