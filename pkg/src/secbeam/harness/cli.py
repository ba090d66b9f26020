"""Command-line entry point: ``secbeam run | sweep-beta | analyze | demo``."""

from __future__ import annotations

import argparse
import functools
import os
import sys
from dataclasses import replace
from pathlib import Path

from ..analysis import TimingParams, epsilon_for_confidence, prob_beam_steal, secbeam_duration
from ..errors import ParseError, SecBeamError, ValidationError
from .campaign import beta_sweep, export_results, run_campaign
from .demo import demo_attack
from .scenario import resolve_scenario, validate

OUTPUT_ENV = "SECBEAM_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3


def _output_dir(arg: str | None) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUTPUT_ENV, "."))


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", help="scenario file, or a shipped fixture name such as scenario1")
    p.add_argument("--seed", type=int, help="override params.seed")
    p.add_argument("--trials", type=int, help="override trials")
    p.add_argument("--epsilon", type=float, help="override params.epsilon_db")
    p.add_argument("--beta", type=float, help="override params.beta")
    p.add_argument("--l-alpha", type=int, help="override params.l_alpha")
    p.add_argument("--protocol", choices=["sls", "auth_sls", "secbeam"])
    p.add_argument("--sigma", type=float, help="override environment.shadowing_sigma_db")
    p.add_argument("--no-adversary", action="store_true", help="drop the adversary")
    p.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or .)")


def _scenario(args):
    s = resolve_scenario(args.scenario)
    over = {"seed": args.seed, "trials": args.trials, "epsilon": args.epsilon, "beta": args.beta,
            "l_alpha": args.l_alpha, "protocol": args.protocol}
    s = s.with_overrides(**{k: v for k, v in over.items() if v is not None})
    if args.sigma is not None:
        s = replace(s, environment=replace(s.environment, shadowing_sigma=args.sigma))
    if args.no_adversary:
        s = s.benign()
    validate(s)
    return s


def _cmd_run(args) -> int:
    s = _scenario(args)
    result = run_campaign(s)
    path = export_results(result, args.output or _output_dir(args.output_dir) / f"{s.name}.csv")
    agg = result.aggregates()
    print(f"{s.name}: {agg['trials']} trials -> {path}")
    for key in ("P_I", "P_R", "P_FA", "accepted_rate", "detect_rate_any", "benign_pl_false_alarm_rate"):
        print(f"  {key} = {agg[key]:.4f}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    s = _scenario(args)
    rows = beta_sweep(s, args.betas)
    lines = ["beta,P_I,P_R,P_FA"] + [f"{r.beta!r},{r.p_i!r},{r.p_r!r},{r.p_fa!r}" for r in rows]
    text = "\r\n".join(lines) + "\r\n"
    path = Path(args.output) if args.output else _output_dir(args.output_dir) / f"{s.name}_beta_sweep.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode())
    sys.stdout.write(text.replace("\r\n", "\n"))
    return EXIT_OK


def _cmd_analyze(args) -> int:
    if args.what == "prob-bs":
        print(f"{prob_beam_steal(args.nm, args.k, args.x):.12g}")
    elif args.what == "epsilon":
        print(f"{epsilon_for_confidence(args.sigma, args.confidence, args.fold):.6f}")
    else:
        t = TimingParams(args.frame_bytes, args.frames_per_sector, args.bandwidth, args.n_sectors,
                         args.n_quasi, args.sbifs, args.lbifs)
        d = secbeam_duration(t)
        print(f"{d * 1e3:.6f} ms")
    return EXIT_OK


def _cmd_demo(args) -> int:
    s = _scenario(args)
    for p in demo_attack(s, _output_dir(args.output_dir), args.trial):
        print(p)
    return EXIT_OK


@functools.lru_cache(maxsize=1)
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="secbeam", description="mmWave beam-alignment security simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one Monte Carlo campaign and export CSV")
    _add_overrides(run)
    run.add_argument("-o", "--output", help="CSV path (overrides --output-dir)")
    run.set_defaults(func=_cmd_run)

    sw = sub.add_parser("sweep-beta", help="passing rates versus beta")
    _add_overrides(sw)
    sw.add_argument("--betas", type=float, nargs="+",
                    default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    sw.add_argument("-o", "--output", help="CSV path")
    sw.set_defaults(func=_cmd_sweep)

    an = sub.add_parser("analyze", help="closed-form calculations")
    asub = an.add_subparsers(dest="what", required=True)
    pb = asub.add_parser("prob-bs", help="beam-stealing probability")
    pb.add_argument("--nm", type=int, required=True)
    pb.add_argument("--k", type=int, required=True)
    pb.add_argument("--x", type=int, required=True)
    ep = asub.add_parser("epsilon", help="path-loss threshold for a confidence level")
    ep.add_argument("--sigma", type=float, required=True)
    ep.add_argument("--confidence", type=float, required=True)
    ep.add_argument("--fold", choices=["difference", "single"], default="difference")
    du = asub.add_parser("duration", help="protocol air time")
    du.add_argument("--frame-bytes", type=float, default=26)
    du.add_argument("--frames-per-sector", type=int, default=1)
    du.add_argument("--bandwidth", type=float, default=160e6, help="Hz")
    du.add_argument("--n-sectors", type=int, default=32)
    du.add_argument("--n-quasi", type=int, default=6)
    du.add_argument("--sbifs", type=float, default=1e-6, help="seconds")
    du.add_argument("--lbifs", type=float, default=18e-6, help="seconds")
    an.set_defaults(func=_cmd_analyze)

    demo = sub.add_parser("demo", help="per-sector SNR tables")
    dsub = demo.add_subparsers(dest="what", required=True)
    da = dsub.add_parser("attack", help="one run with and without the adversary")
    _add_overrides(da)
    da.add_argument("--trial", type=int, default=0)
    demo.set_defaults(func=_cmd_demo)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SecBeamError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
