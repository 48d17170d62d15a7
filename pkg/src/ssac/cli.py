"""Command-line interface: generate, run, replicate, check-theory, serve."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from ssac.algorithm import Policy, SearchVariant, SsacParams, run_ssac
from ssac.datagen import GenConfig, GenerationError, generate
from ssac.experiments import ExperimentConfig, run_grid, write_grid_outputs
from ssac.geometry import compute_geometry, read_dataset, write_dataset
from ssac.oracles import OracleModel
from ssac.theory_checks import (
    default_hoeffding_grid,
    hoeffding_tail_check,
    lambda_max,
    separation_check,
    distance_bounds_check,
    recovery_preconditions,
    transpose_dilation,
)
from ssac.rng import Stream


def _gen_config_from_args(args) -> GenConfig:
    if args.config:
        data = json.loads(Path(args.config).read_text())
        merged = {
            "n": data["n"],
            "m": data["m"],
            "k": data["k"],
            "sigma_std": data["sigma_std"],
            "gamma_min": data["gamma_min"],
            "gamma_max": data["gamma_max"],
            "seed": data.get("seed", 0),
            "max_attempts": data.get("max_attempts", 10_000),
        }
    else:
        required = ["n", "m", "k", "sigma_std", "gamma_min", "gamma_max"]
        missing = [name for name in required if getattr(args, name) is None]
        if missing:
            raise SystemExit(f"generate: missing flags {missing} (or use --config)")
        merged = {
            "n": args.n,
            "m": args.m,
            "k": args.k,
            "sigma_std": args.sigma_std,
            "gamma_min": args.gamma_min,
            "gamma_max": args.gamma_max,
            "seed": args.seed,
            "max_attempts": args.max_attempts,
        }
    return GenConfig(**merged)


def cmd_generate(args) -> int:
    config = _gen_config_from_args(args)
    try:
        dataset, truth, gamma = generate(config)
    except GenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_dataset(args.out, dataset, truth)
    print(f"wrote {args.out}: n={len(dataset)} m={dataset.dim} k={truth.k} gamma={gamma:.6f}")
    return 0


def _oracle_from_args(args, dataset, truth) -> OracleModel:
    kind = args.oracle
    if kind == "perfect":
        return OracleModel("perfect", dataset, truth)
    if kind == "random":
        if args.q is None:
            raise SystemExit("run: --q is required for the random oracle")
        return OracleModel("random", dataset, truth, q=args.q)
    if kind == "local":
        if args.nu is None or args.rho is None:
            raise SystemExit("run: --nu and --rho are required for the local oracle")
        return OracleModel("local", dataset, truth, nu=args.nu, rho=args.rho)
    if kind == "global":
        if args.rho is None:
            raise SystemExit("run: --rho is required for the global oracle")
        return OracleModel("global", dataset, truth, rho=args.rho)
    raise SystemExit(f"run: unknown oracle {kind!r}")


def cmd_run(args) -> int:
    dataset, truth = read_dataset(args.dataset)
    if not truth.is_ground_truth():
        print("error: dataset labels are not a complete ground truth", file=sys.stderr)
        return 1
    oracle = _oracle_from_args(args, dataset, truth)
    params = SsacParams(
        k=args.k if args.k is not None else truth.k,
        eta=args.eta,
        beta=args.beta,
        delta=args.delta,
        variant=SearchVariant(args.variant),
        policy=Policy(args.policy),
        seed=args.seed,
    )
    result = run_ssac(dataset, oracle, params)
    write_dataset(args.out, dataset, result.clustering)
    report = result.to_dict()
    report["params"] = {
        "k": params.k,
        "eta": params.eta,
        "beta": params.beta,
        "delta": params.delta,
        "variant": params.variant.value,
        "policy": params.policy.value,
        "seed": params.seed,
    }
    report_path = args.report or (str(args.out) + ".report.json")
    Path(report_path).write_text(json.dumps(report, indent=2) + "\n")
    print(
        f"wrote {args.out} (+{report_path}): queries={result.ledger.same_cluster_count} "
        f"failures={len(result.failures)} unassigned={result.unassigned_count}"
    )
    return 0


def cmd_replicate(args) -> int:
    data = json.loads(Path(args.config).read_text())
    gen = GenConfig(
        n=data["gen"]["n"],
        m=data["gen"]["m"],
        k=data["gen"]["k"],
        sigma_std=data["gen"]["sigma_std"],
        gamma_min=data["gen"]["gamma_min"],
        gamma_max=data["gen"]["gamma_max"],
        seed=data["gen"].get("seed", 0),
        max_attempts=data["gen"].get("max_attempts", 10_000),
    )
    config = ExperimentConfig(
        gen=gen,
        q_list=tuple(data["q_list"]),
        eta_list=tuple(data["eta_list"]),
        n_rep=args.rounds if args.rounds is not None else data["n_rep"],
        base_seed=data["base_seed"],
        beta=data.get("beta", 10),
        delta=data.get("delta", 0.1),
        variant=SearchVariant(data.get("variant", "unified")),
        policy=Policy(data.get("policy", "treat_as_different")),
        oracle_kind=data.get("oracle_kind", "random"),
        nu=data.get("nu"),
        rho=data.get("rho"),
    )
    cells, records = run_grid(config, jobs=args.jobs)
    write_grid_outputs(config, cells, records, args.out)
    print(f"wrote {args.out} and {args.out}.rounds.csv ({config.n_rep} rounds)")
    return 0


def _report_line(name: str, params: str, verdict: bool, slack) -> str:
    flag = "PASS" if verdict else "FAIL"
    return f"check={name} params=[{params}] verdict={flag} slack={slack}"


def cmd_check_theory(args) -> int:
    import numpy as np

    lines: list[str] = []
    ok = True

    # dilation spectral identity on seeded random matrices
    worst = 0.0
    rng = Stream(1234)
    for trial in range(args.matrices):
        d1 = 1 + trial % 8
        d2 = 1 + (trial * 3) % 8
        a = rng.normals((d1, d2))
        gap = abs(lambda_max(transpose_dilation(a)) - float(np.linalg.svd(a, compute_uv=False)[0]))
        worst = max(worst, gap)
    lines.append(_report_line("dilation_spectral_identity", f"matrices={args.matrices}", worst <= 1e-9, f"{worst:.3e}"))
    ok &= worst <= 1e-9

    # vector Hoeffding tail bound across the default grid
    for cfg in default_hoeffding_grid(trials=args.trials):
        records = hoeffding_tail_check(cfg)
        holds = all(r.holds for r in records)
        margin = min(r.bound + r.slack - r.empirical for r in records)
        lines.append(
            _report_line("hoeffding_tail", f"m={cfg.m} s={cfg.s} trials={cfg.trials}", holds, f"{margin:.3e}")
        )
        ok &= holds

    if args.dataset:
        dataset, truth = read_dataset(args.dataset)
        geometry = compute_geometry(dataset, truth)
        prop = distance_bounds_check(dataset, truth)
        lines.append(
            _report_line(
                "pairwise_distance_bounds",
                f"gamma={prop.gamma:.4f} inter_applicable={prop.inter_applicable}",
                prop.ok,
                "-",
            )
        )
        ok &= prop.ok
        if prop.gamma > 1.0 and math.isfinite(prop.gamma):
            eps = (prop.gamma - 1.0) / 2.0
            for i in range(1, truth.k + 1):
                rep = separation_check(dataset, truth, geometry, geometry.centers[i - 1], i, eps)
                lines.append(
                    _report_line(
                        "close_center_separation",
                        f"cluster={i} eps={eps:.4f}",
                        rep.separation_holds and rep.precondition_met,
                        "-",
                    )
                )
                ok &= rep.separation_holds
            for kind in ("local", "global"):
                model = (
                    OracleModel("local", dataset, truth, nu=prop.gamma, rho=args.rho)
                    if kind == "local"
                    else OracleModel("global", dataset, truth, rho=args.rho)
                )
                report = recovery_preconditions(dataset, truth, model, eps / 2.0)
                slack = min(pc.slack for pc in report.per_cluster)
                lines.append(
                    _report_line(
                        f"{kind}_good_point_exists",
                        f"rho={args.rho} q_d={report.q_d:.4f} feasible={report.parameter_feasible}",
                        report.all_exist,
                        f"{slack:.4f}",
                    )
                )

    text = "\n".join(lines)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0 if ok else 1


def cmd_serve(args) -> int:
    import uvicorn

    from ssac.service import create_app

    app = create_app(static_dir=args.static_dir, transcript_dir=args.transcript_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssac", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate a margin-constrained Gaussian dataset")
    p_gen.add_argument("--config", help="JSON file with n,m,k,sigma_std,gamma_min,gamma_max,seed")
    p_gen.add_argument("--n", type=int)
    p_gen.add_argument("--m", type=int)
    p_gen.add_argument("--k", type=int)
    p_gen.add_argument("--sigma-std", dest="sigma_std", type=float)
    p_gen.add_argument("--gamma-min", dest="gamma_min", type=float)
    p_gen.add_argument("--gamma-max", dest="gamma_max", type=float)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--max-attempts", dest="max_attempts", type=int, default=10_000)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_generate)

    p_run = sub.add_parser("run", help="run the clustering algorithm against a simulated oracle")
    p_run.add_argument("--dataset", required=True)
    p_run.add_argument("--oracle", required=True, choices=["perfect", "random", "local", "global"])
    p_run.add_argument("--q", type=float)
    p_run.add_argument("--nu", type=float)
    p_run.add_argument("--rho", type=float)
    p_run.add_argument("--k", type=int, help="defaults to the dataset header's k")
    p_run.add_argument("--eta", type=float, required=True)
    p_run.add_argument("--beta", type=int, default=10)
    p_run.add_argument("--delta", type=float, default=0.1)
    p_run.add_argument("--variant", default="unified", choices=[v.value for v in SearchVariant])
    p_run.add_argument("--policy", default="treat_as_different", choices=[p.value for p in Policy])
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", required=True, help="recovered clustering (dataset format)")
    p_run.add_argument("--report", help="run summary JSON (default: <out>.report.json)")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("replicate", help="run a (q, eta) replication grid to CSV")
    p_rep.add_argument("--config", required=True)
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--rounds", type=int, help="override the config's n_rep")
    p_rep.add_argument("--jobs", type=int, default=1)
    p_rep.set_defaults(func=cmd_replicate)

    p_chk = sub.add_parser("check-theory", help="numerical verification report")
    p_chk.add_argument("--trials", type=int, default=100_000)
    p_chk.add_argument("--matrices", type=int, default=100)
    p_chk.add_argument("--dataset", help="optional dataset file for margin-dependent checks")
    p_chk.add_argument("--rho", type=float, default=0.95)
    p_chk.add_argument("--out", help="also write the report to this file")
    p_chk.set_defaults(func=cmd_check_theory)

    p_srv = sub.add_parser("serve", help="serve the live oracle session API (and UI)")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8787)
    p_srv.add_argument("--static-dir", dest="static_dir")
    p_srv.add_argument("--transcript-dir", dest="transcript_dir")
    p_srv.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
