"""Command-line driver: ``spex plan | collect | decode | explain | baseline``.

Exit codes: 0 success, 2 invalid configuration or input files, 3 oracle or
transport failure (a partial bank is kept and the next run resumes), 4
non-convergence when ``--strict`` is given.

Every output file is a pure function of the inputs; wall-clock timestamps go
to ``<name>.meta.json`` sidecars.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import baselines, decoder, indices, metrics, sampling, wht
from .bch import MAX_M
from .gf2 import unpack_bits
from .oracle import OracleError, PlantedFunction, mask_strings, random_planted, remote_oracle, replay_oracle, \
    synthetic_oracle

log = logging.getLogger("spex")

EXIT_OK, EXIT_CONFIG, EXIT_ORACLE, EXIT_NONCONVERGED = 0, 2, 3, 4
REPORT_FORMAT = "spex-report/1"
DEFAULT_INDICES = "mobius,banzhaf-ii,shapley-value"
SYNTHETIC_SPARSITY = 20
SYNTHETIC_DEGREE = 3
EXHAUSTIVE_ZERO_TOL = 1e-12  # relative; dense transforms leave rounding dust


class ConfigError(ValueError):
    pass


# --- configuration -----------------------------------------------------------

def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--parallelism", type=int, default=1)
    common.add_argument("--strict", action="store_true", help="exit 4 when message passing does not converge")
    common.add_argument("-v", "--verbose", action="count", default=0)

    planning = argparse.ArgumentParser(add_help=False)
    planning.add_argument("--n", type=int, help="number of features")
    planning.add_argument("--b", type=int, default=8, help="log2 of bins per subsampler")
    planning.add_argument("--t", type=int, default=5, help="BCH error-correcting capability")
    planning.add_argument("--c", type=int, default=3, help="number of subsamplers")

    oracle = argparse.ArgumentParser(add_help=False)
    oracle.add_argument("--oracle", default="synthetic",
                        help="synthetic | synthetic:planted.json | replay:path.jsonl | remote:url")
    oracle.add_argument("--batch-size", type=int, default=4096)

    decoding = argparse.ArgumentParser(add_help=False)
    decoding.add_argument("--gamma", type=float, default=decoder.DEFAULT_GAMMA)
    decoding.add_argument("--chase-depth", type=int, default=decoder.DEFAULT_CHASE_DEPTH)
    decoding.add_argument("--max-rounds", type=int, default=decoder.DEFAULT_MAX_ROUNDS)

    files = argparse.ArgumentParser(add_help=False)
    files.add_argument("--plan", type=Path, help="plan file (default OUT/plan.json)")
    files.add_argument("--bank", type=Path, help="bank file (default OUT/bank.jsonl)")

    parser = argparse.ArgumentParser(prog="spex", description="Sparse Fourier explanations of black-box value functions.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("plan", parents=[common, planning], help="build a sampling plan and its mask list")
    sub.add_parser("collect", parents=[common, oracle, files], help="query the oracle for every planned mask")
    sub.add_parser("decode", parents=[common, decoding, files], help="recover the sparse spectrum from a bank")
    ex = sub.add_parser("explain", parents=[common, planning, oracle, decoding],
                        help="plan, collect, decode, attribute and evaluate in one run")
    ex.add_argument("--index", action="append", default=None,
                    help=f"index kinds, KIND or KIND:ORDER, comma separated (default {DEFAULT_INDICES})")
    ex.add_argument("--degree", type=int, default=2, help="order for faith-* and shapley-taylor indices")
    ex.add_argument("--r", type=_ints, default=[1], help="comma-separated removal sizes")
    ex.add_argument("--test-masks", type=int, default=metrics.DEFAULT_TEST_MASKS)
    bl = sub.add_parser("baseline", parents=[common, files], help="regression baselines on a collected bank")
    bl.add_argument("--method", choices=("lasso", "ridge"), default="lasso")
    bl.add_argument("--degree", type=int, default=2)
    bl.add_argument("--column-cap", type=int, default=baselines.DEFAULT_COLUMN_CAP)
    return parser


def validate(args) -> None:
    """Check module preconditions before doing any work."""
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(args.parallelism >= 1, "--parallelism must be >= 1")
    if hasattr(args, "n"):
        need(args.n is not None, "--n is required")
        need(args.n >= 1, "--n must be >= 1")
        need(1 <= args.b <= min(args.n, 24), "--b must be between 1 and min(n, 24)")
        need(args.t >= 1, "--t must be >= 1")
        need(args.c >= 1, "--c must be >= 1")
        need(2 * args.t < (1 << MAX_M) - 1, f"--t={args.t} is too large for any supported BCH code")
    if hasattr(args, "gamma"):
        need(0.0 < args.gamma < 1.0, "--gamma must lie in (0, 1)")
        need(args.chase_depth >= 0, "--chase-depth must be >= 0")
        need(args.max_rounds >= 1, "--max-rounds must be >= 1")
    if hasattr(args, "batch_size"):
        need(args.batch_size >= 1, "--batch-size must be >= 1")
        need(args.oracle.split(":", 1)[0] in ("synthetic", "replay", "remote"),
             f"unknown oracle spec {args.oracle!r}")
    if hasattr(args, "test_masks"):
        need(args.test_masks >= 2, "--test-masks must be >= 2")
        need(all(0 <= r < args.n for r in args.r), "--r values must satisfy 0 <= r < n")
        need(args.degree >= 0, "--degree must be >= 0")
        args.index_specs = parse_indices(args.index, args.degree)
    if getattr(args, "command", None) == "baseline":
        need(args.degree >= 0, "--degree must be >= 0")


def parse_indices(values: list[str] | None, default_order: int) -> list[tuple[str, int | None]]:
    out = []
    for chunk in values or [DEFAULT_INDICES]:
        for item in chunk.split(","):
            item = item.strip()
            if not item:
                continue
            kind, _, order = item.partition(":")
            if kind not in indices.KINDS:
                raise ConfigError(f"unknown index kind {kind!r}; choose from {', '.join(indices.KINDS)}")
            if kind in indices.ORDERED_KINDS:
                try:
                    out.append((kind, int(order) if order else default_order))
                except ValueError:
                    raise ConfigError(f"bad order in {item!r}") from None
            else:
                out.append((kind, None))
    return out


def make_oracle(spec: str, n: int, seed: int):
    """Resolve an oracle spec string into a callable on ``(N, n)`` masks."""
    kind, _, arg = spec.partition(":")
    if kind == "synthetic":
        if arg:
            planted = PlantedFunction.from_json(json.loads(Path(arg).read_text()))
            if planted.n != n:
                raise ConfigError(f"planted function has n={planted.n}, plan has n={n}")
        else:
            cap = sum(math.comb(n, d) for d in range(1, min(SYNTHETIC_DEGREE, n) + 1))
            planted = random_planted(n, min(SYNTHETIC_SPARSITY, cap), SYNTHETIC_DEGREE, seed)
        return synthetic_oracle(planted)
    if kind == "replay":
        if not arg or not Path(arg).exists():
            raise ConfigError(f"replay file {arg!r} not found")
        oracle = replay_oracle(arg)
        if oracle.n is not None and oracle.n != n:
            raise ConfigError(f"replay file has n={oracle.n}, plan has n={n}")
        return oracle
    if kind == "remote":
        if not arg:
            raise ConfigError("remote oracle needs a URL: remote:http://host/path")
        return remote_oracle(arg)
    raise ConfigError(f"unknown oracle spec {spec!r}")


# --- outputs -----------------------------------------------------------------

def _schema() -> dict:
    return json.loads(resources.files("spex").joinpath("schemas/report.schema.json").read_text())


def validate_report(report: dict) -> None:
    jsonschema.validate(report, _schema())


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_json(path: Path, obj, started: float, argv: list[str]) -> None:
    path.write_text(_dump(obj))
    meta = {"file": path.name, "started": started, "finished": time.time(), "argv": argv}
    path.with_name(path.stem + ".meta.json").write_text(_dump(meta))


def _config(args) -> dict:
    keys = ("n", "b", "t", "c", "seed", "gamma", "chase_depth", "max_rounds", "oracle", "degree", "r",
            "test_masks", "method")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _plan_summary(plan: sampling.SamplingPlan) -> dict:
    unique, _ = sampling.distinct_masks(plan)
    return {"hash": sampling.plan_hash(plan), "budget": plan.budget, "distinct": int(unique.shape[0]), "p": plan.p}


def _decode_summary(bank, spectrum) -> dict:
    return {"method": "message-passing", "converged": spectrum.converged, "rounds": spectrum.rounds,
            "sparsity": len(spectrum), "residual_energy": float(decoder.residual_energy(bank, spectrum).sum())}


def _exhaustive_spectrum(oracle, n: int) -> decoder.RecoveredSpectrum:
    """Exact transform over all 2^n masks, for runs where 2^b already covers them."""
    F = wht.brute_force_spectrum(oracle, n)
    scale = float(np.max(np.abs(F))) if F.size else 0.0
    return decoder.RecoveredSpectrum.from_dense(F, n, tol=EXHAUSTIVE_ZERO_TOL * scale)


def _report(command: str, args, **sections) -> dict:
    report = {"format": REPORT_FORMAT, "command": command, "config": _config(args)}
    report.update({k: v for k, v in sections.items() if v is not None})
    validate_report(report)
    return report


def _paths(args) -> tuple[Path, Path]:
    plan = args.plan if args.plan is not None else args.out / "plan.json"
    bank = args.bank if args.bank is not None else args.out / "bank.jsonl"
    return plan, bank


def _load_plan(path: Path) -> sampling.SamplingPlan:
    if not path.exists():
        raise ConfigError(f"plan file {path} not found")
    try:
        return sampling.load_plan(path)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid plan file {path}: {exc}") from exc


def _load_bank(path: Path, plan) -> sampling.SampleBank:
    if not path.exists():
        raise ConfigError(f"bank file {path} not found")
    try:
        return sampling.read_bank(path, plan)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid bank file {path}: {exc}") from exc


def _collect(plan, oracle, bank_path: Path, args) -> sampling.SampleBank:
    bank = sampling.collect_resumable(plan, oracle, bank_path, args.parallelism, args.batch_size)
    np.save(bank_path.with_suffix(".spectra.npy"), bank.spectra)
    return bank


def _decode(bank, args):
    spectrum = decoder.message_passing(bank, args.gamma, args.chase_depth, args.max_rounds)
    if not spectrum.converged:
        log.warning("message passing did not converge within %d rounds", args.max_rounds)
    return spectrum


# --- subcommands -------------------------------------------------------------

def cmd_plan(args, started, argv) -> int:
    plan = sampling.build_plan(args.n, args.b, args.t, args.c, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    sampling.save_plan(plan, args.out / "plan.json")
    unique, inverse = sampling.distinct_masks(plan)
    ids = sampling.all_ids(plan)
    first = {}
    for q, u in enumerate(inverse):
        first.setdefault(int(u), ids[q])
    with (args.out / "masks.jsonl").open("w") as fh:
        for u, s in enumerate(mask_strings(unpack_bits(unique, plan.n))):
            fh.write(json.dumps({"id": first[u], "mask": s}) + "\n")
    summary = _plan_summary(plan)
    write_json(args.out / "report.json", _report("plan", args, plan=summary), started, argv)
    print(f"enumerated masks: {summary['budget']}")
    print(f"distinct masks:   {summary['distinct']}")
    return EXIT_OK


def cmd_collect(args, started, argv) -> int:
    plan_path, bank_path = _paths(args)
    plan = _load_plan(plan_path)
    oracle = make_oracle(args.oracle, plan.n, plan.seed)
    bank_path.parent.mkdir(parents=True, exist_ok=True)
    _collect(plan, oracle, bank_path, args)
    print(f"collected {plan.budget} samples into {bank_path}")
    return EXIT_OK


def cmd_decode(args, started, argv) -> int:
    plan_path, bank_path = _paths(args)
    plan = _load_plan(plan_path)
    bank = _load_bank(bank_path, plan)
    spectrum = _decode(bank, args)
    args.out.mkdir(parents=True, exist_ok=True)
    spectrum.save(args.out / "spectrum.json")
    report = _report("decode", args, plan=_plan_summary(plan), decode=_decode_summary(bank, spectrum),
                     spectrum=spectrum.to_json())
    write_json(args.out / "report.json", report, started, argv)
    print(f"recovered {len(spectrum)} coefficients in {spectrum.rounds} rounds")
    if not spectrum.converged and args.strict:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_explain(args, started, argv) -> int:
    oracle = make_oracle(args.oracle, args.n, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    if args.n <= min(args.b, wht.BRUTE_FORCE_CAP):
        # one subsampler would already touch all 2^n masks; the exact transform is cheaper
        log.info("n=%d <= b=%d: using the exhaustive transform", args.n, args.b)
        spectrum = _exhaustive_spectrum(oracle, args.n)
        plan_summary = None
        decode_summary = {"method": "exhaustive", "converged": True, "rounds": 0, "sparsity": len(spectrum)}
    else:
        plan = sampling.build_plan(args.n, args.b, args.t, args.c, args.seed)
        sampling.save_plan(plan, args.out / "plan.json")
        bank = _collect(plan, oracle, args.out / "bank.jsonl", args)
        spectrum = _decode(bank, args)
        plan_summary, decode_summary = _plan_summary(plan), _decode_summary(bank, spectrum)
    spectrum.save(args.out / "spectrum.json")
    reports = [indices.compute_index(spectrum, kind, order).to_json() for kind, order in args.index_specs]
    results = [metrics.faithfulness_r2(spectrum, oracle, args.n, args.test_masks, args.seed)]
    results += [metrics.top_r_removal(spectrum, oracle, args.n, r) for r in args.r]
    report = _report("explain", args, plan=plan_summary, decode=decode_summary,
                     spectrum=spectrum.to_json(), indices=reports, metrics=[m.to_json() for m in results])
    write_json(args.out / "report.json", report, started, argv)
    r2 = results[0].value
    print(f"recovered {len(spectrum)} coefficients; faithfulness R^2 = {r2:.6f}")
    if not spectrum.converged and args.strict:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_baseline(args, started, argv) -> int:
    plan_path, bank_path = _paths(args)
    plan = _load_plan(plan_path)
    bank = _load_bank(bank_path, plan)
    unique, inverse = sampling.distinct_masks(plan)
    values = np.zeros(unique.shape[0])
    values[inverse] = bank.values.ravel()
    problem = baselines.RegressionProblem(unpack_bits(unique, plan.n), values, degree=args.degree, seed=args.seed,
                                          column_cap=args.column_cap, parallelism=args.parallelism)
    args.out.mkdir(parents=True, exist_ok=True)
    info = {"method": args.method, "degree": args.degree if args.method == "lasso" else 1,
            "samples": int(values.size)}
    if args.method == "lasso":
        try:
            spectrum = baselines.lasso_fourier(problem)
        except baselines.ColumnCapError as exc:
            raise ConfigError(str(exc)) from exc
        spectrum.save(args.out / "baseline.json")
        report = _report("baseline", args, baseline=info, spectrum=spectrum.to_json())
        print(f"lasso kept {len(spectrum)} coefficients")
    else:
        weights = baselines.ridge_first_order(problem)
        (args.out / "baseline.json").write_text(_dump(weights.to_json()))
        report = _report("baseline", args, baseline=info, indices=[weights.to_json()])
        print(f"ridge fitted {plan.n} first-order weights")
    write_json(args.out / "report.json", report, started, argv)
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "collect": cmd_collect, "decode": cmd_decode, "explain": cmd_explain,
            "baseline": cmd_baseline}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.time()
    try:
        validate(args)
        return COMMANDS[args.command](args, started, argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sampling.CollectionError, OracleError) as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        print("partial results were kept; rerun the same command to resume", file=sys.stderr)
        return EXIT_ORACLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
