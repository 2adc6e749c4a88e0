"""Batch experiment runner.

Every subcommand writes a JSON report with the top-level keys
``command, config, results, runtime_ms, seed``. A JSON config file given with
``--config`` supplies option values; flags on the command line win.

Exit codes: 0 success, 1 a verification found a violated invariant,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import channel, measurement, nosignaling, randomness, states

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# defaults per command; keys double as the allowed config-file keys
DEFAULTS = {
    "verify-nosignaling": {"trials": 1000, "seed": None, "tol": 1e-12, "kind": "mixed", "out": None},
    "scenarios": {"trials": 100, "seed": None, "tol": 1e-12, "out": None},
    "channel run": {
        "block_len": 256,
        "trials": 10_000,
        "seed": None,
        "template_seed": None,
        "threshold": None,
        "policy": channel.HONEST,
        "calibration_samples": 10_000,
        "quantile": 0.05,
        "out": None,
        "csv": None,
    },
    "randomness analyze": {
        "input": None,
        "raw_bytes": False,
        "max_k": 4,
        "entropy_k": 4,
        "block_len": 256,
        "calibration_samples": 10_000,
        "quantile": 0.05,
        "seed": None,
        "out": None,
    },
    "measure sample": {
        "state": "mixed",
        "p": 0.5,
        "axis": None,
        "shots": 1000,
        "seed": None,
        "out": None,
        "bits_out": None,
    },
    "oracle enum": {"n": 3, "seed": None, "tol": 1e-12, "out": None},
}
SEED_OPTIONAL = {"oracle enum"}


def _common(p: argparse.ArgumentParser, seed_help: str = "RNG seed (required)") -> None:
    p.add_argument("--seed", type=int, help=seed_help)
    p.add_argument("--config", type=Path, help="JSON file of option values; flags override it")
    p.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
    p.add_argument("--no-timing", action="store_true", help="write runtime_ms as null (byte-reproducible reports)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nosignal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sd = argparse.SUPPRESS

    p = sub.add_parser("verify-nosignaling", help="Alice's marginal under random Bob families", argument_default=sd)
    p.add_argument("--trials", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--kind", choices=["mixed", nosignaling.SPIN_AXIS, nosignaling.GENERAL_KRAUS])
    _common(p)

    p = sub.add_parser("scenarios", help="Bob once / Bob twice / Bob idle equivalence", argument_default=sd)
    p.add_argument("--trials", type=int)
    p.add_argument("--tol", type=float)
    _common(p)

    grp = sub.add_parser("channel", help="compressibility channel experiments")
    gsub = grp.add_subparsers(dest="action", required=True, metavar="ACTION")
    p = gsub.add_parser("run", help="run a channel experiment", argument_default=sd)
    p.add_argument("--block-len", dest="block_len", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--template-seed", dest="template_seed", type=int, help="defaults to --seed")
    p.add_argument("--threshold", type=float, help="compression-ratio cutoff; calibrated when omitted")
    p.add_argument("--policy", choices=list(channel.POLICIES))
    p.add_argument("--calibration-samples", dest="calibration_samples", type=int)
    p.add_argument("--quantile", type=float)
    p.add_argument("--csv", type=Path, help="per-trial CSV output")
    _common(p, "master seed (required)")

    grp = sub.add_parser("randomness", help="randomness statistics of bit files")
    gsub = grp.add_subparsers(dest="action", required=True, metavar="ACTION")
    p = gsub.add_parser("analyze", help="analyze a bit-stream file", argument_default=sd)
    p.add_argument("--input", type=Path)
    p.add_argument("--raw-bytes", dest="raw_bytes", action="store_true", help="input is raw bytes, MSB first")
    p.add_argument("--max-k", dest="max_k", type=int)
    p.add_argument("--entropy-k", dest="entropy_k", type=int)
    p.add_argument("--block-len", dest="block_len", type=int)
    p.add_argument("--calibration-samples", dest="calibration_samples", type=int)
    p.add_argument("--quantile", type=float)
    _common(p, "seed for threshold calibration (required)")

    grp = sub.add_parser("measure", help="measurement sampling")
    gsub = grp.add_subparsers(dest="action", required=True, metavar="ACTION")
    p = gsub.add_parser("sample", help="sample outcomes of a one-qubit measurement", argument_default=sd)
    p.add_argument("--state", choices=["mixed", "zero", "one", "bernoulli"])
    p.add_argument("--p", type=float, help="P(0) for --state bernoulli")
    p.add_argument("--axis", type=str, help="measurement axis 'x,y,z'; computational basis when omitted")
    p.add_argument("--shots", type=int)
    p.add_argument("--bits-out", dest="bits_out", type=Path, help="write sampled bits as a bit-stream file")
    _common(p)

    grp = sub.add_parser("oracle", help="brute-force self checks")
    gsub = grp.add_subparsers(dest="action", required=True, metavar="ACTION")
    p = gsub.add_parser("enum", help="string law vs full tensor-space computation", argument_default=sd)
    p.add_argument("--n", type=int)
    p.add_argument("--tol", type=float)
    _common(p, "also check a seeded random state and axis")
    return parser


def _merge(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    flags = vars(args)
    if "config" in flags:
        try:
            loaded = json.loads(Path(flags["config"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise UsageError(f"unknown config keys for {command!r}: {unknown}")
        cfg.update(loaded)
    for key in cfg:
        if key in flags:
            cfg[key] = flags[key]
    if cfg.get("seed") is None and command not in SEED_OPTIONAL:
        raise UsageError(f"{command}: --seed is required")
    for key in ("out", "csv", "input", "bits_out"):
        if cfg.get(key) is not None:
            cfg[key] = str(cfg[key])
    return cfg


def _positive(cfg: dict, *keys: str) -> None:
    for k in keys:
        if not isinstance(cfg[k], int) or cfg[k] < 1:
            raise UsageError(f"{k} must be a positive integer, got {cfg[k]!r}")


def cmd_verify_nosignaling(cfg: dict) -> tuple[dict, bool]:
    _positive(cfg, "trials")
    kinds = {
        "mixed": [nosignaling.SPIN_AXIS, nosignaling.GENERAL_KRAUS],
        nosignaling.SPIN_AXIS: [nosignaling.SPIN_AXIS],
        nosignaling.GENERAL_KRAUS: [nosignaling.GENERAL_KRAUS],
    }[cfg["kind"]]
    devs = {k: 0.0 for k in kinds}
    bob_sum_resid = 0.0
    for t in range(cfg["trials"]):
        kind = kinds[t % len(kinds)]
        bob = nosignaling.random_bob_family(nosignaling._trial_seed(cfg["seed"], t, 0), kind)
        rep = nosignaling.no_signal_report(bob)
        devs[kind] = max(devs[kind], rep.deviation, abs(rep.p1_marginal - 0.5))
        bob_sum_resid = max(bob_sum_resid, abs(sum(rep.bob_probabilities.values()) - 1.0))
    worst = max(devs.values())
    print(f"max |P(0) - 1/2| = {worst:.3e} over {cfg['trials']} Bob families", file=sys.stderr)
    results = {"max_deviation": worst, "max_deviation_by_kind": devs, "max_bob_probability_residual": bob_sum_resid}
    return results, worst <= cfg["tol"]


def cmd_scenarios(cfg: dict) -> tuple[dict, bool]:
    _positive(cfg, "trials")
    rep = nosignaling.scenario_equivalence(cfg["seed"], cfg["trials"])
    print(f"max |P(0) - 1/2| across scenarios = {rep.max_deviation:.3e}", file=sys.stderr)
    return rep.to_dict(), rep.max_deviation <= cfg["tol"]


def cmd_channel_run(cfg: dict) -> tuple[dict, bool]:
    _positive(cfg, "block_len", "trials", "calibration_samples")
    try:
        ccfg = channel.ChannelConfig(
            block_len=cfg["block_len"],
            trials=cfg["trials"],
            template_seed=cfg["seed"] if cfg["template_seed"] is None else cfg["template_seed"],
            master_seed=cfg["seed"],
            classifier_threshold=cfg["threshold"],
            bob_policy=cfg["policy"],
            calibration_samples=cfg["calibration_samples"],
            calibration_quantile=cfg["quantile"],
        )
        ccfg.threshold()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rep = channel.run_experiment(ccfg)
    if cfg["csv"]:
        rep.write_csv(cfg["csv"])
    print(f"mutual information = {rep.mutual_information:.3e} bits, accuracy = {rep.accuracy:.4f}", file=sys.stderr)
    return rep.to_dict(), True


def cmd_randomness_analyze(cfg: dict) -> tuple[dict, bool]:
    if not cfg["input"]:
        raise UsageError("randomness analyze: --input is required")
    try:
        bits = randomness.read_bits(cfg["input"], raw=bool(cfg["raw_bytes"]))
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    if bits.size == 0:
        raise UsageError("input holds no bits")
    results = {
        "length": int(bits.size),
        "ones_fraction": float(bits.mean()),
        "compression_ratio": randomness.compression_ratio(bits),
    }
    if bits.size >= cfg["entropy_k"]:
        results["block_entropy"] = {"k": cfg["entropy_k"], "bits_per_symbol": randomness.block_entropy(bits, cfg["entropy_k"])}
    k = cfg["max_k"]
    while k >= 1 and bits.size < (1 << k) * k:
        k -= 1
    if k >= 1:
        results["borel_normality"] = randomness.borel_normality(bits, k).to_dict()
    if bits.size >= 10:
        stat, p = randomness.chi_square_uniformity(np.bincount(bits, minlength=2))
        results["chi_square_bits"] = {"statistic": stat, "p_value": p}
    n = cfg["block_len"]
    blocks = bits[: bits.size // n * n].reshape(-1, n)
    if len(blocks):
        theta = randomness.calibrate_threshold(n, cfg["calibration_samples"], cfg["quantile"], cfg["seed"])
        ratios = randomness.compression_ratios(blocks)
        results["blocks"] = {
            "block_len": n,
            "count": int(len(blocks)),
            "threshold": theta,
            "compressible_fraction": float((ratios < theta).mean()),
            "mean_ratio": float(ratios.mean()),
        }
    return results, True


def _parse_axis(text: str) -> np.ndarray:
    try:
        axis = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad --axis {text!r}") from exc
    if axis.shape != (3,) or np.linalg.norm(axis) == 0:
        raise UsageError("--axis needs three comma-separated numbers, not all zero")
    return axis / np.linalg.norm(axis)


def cmd_measure_sample(cfg: dict) -> tuple[dict, bool]:
    _positive(cfg, "shots")
    try:
        rho = {
            "mixed": states.maximally_mixed,
            "zero": lambda: states.bernoulli_state(1.0),
            "one": lambda: states.bernoulli_state(0.0),
            "bernoulli": lambda: states.bernoulli_state(float(cfg["p"])),
        }[cfg["state"]]()
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad state: {exc}") from exc
    fam = measurement.computational_family() if cfg["axis"] is None else measurement.spin_axis_family(_parse_axis(cfg["axis"]))
    exact = measurement.outcome_probabilities(rho, fam)
    out = measurement.sample_outcomes(rho, fam, cfg["shots"], cfg["seed"])
    counts = np.bincount(out, minlength=2)
    if cfg["bits_out"]:
        randomness.write_bits(cfg["bits_out"], out)
    results = {
        "labels": list(fam.labels),
        "exact_probabilities": exact.tolist(),
        "counts": counts.tolist(),
        "frequencies": (counts / cfg["shots"]).tolist(),
    }
    return results, True


def cmd_oracle_enum(cfg: dict) -> tuple[dict, bool]:
    n = cfg["n"]
    if not isinstance(n, int) or not 1 <= n <= 6:
        raise UsageError(f"--n must be between 1 and 6, got {n!r}")
    cases = [("maximally_mixed", states.maximally_mixed(), measurement.computational_family())]
    if cfg["seed"] is not None:
        g = np.random.default_rng(cfg["seed"])
        axis = nosignaling.axis_from_uniforms(g.random(), g.random())
        cases.append((f"bernoulli+axis:{cfg['seed']}", states.bernoulli_state(g.random()), measurement.spin_axis_family(axis)))
    results, ok = {"n": n, "cases": []}, True
    for name, rho, fam in cases:
        big = states.tensor_power(rho, n)
        prod = measurement.product_family([fam] * n)
        full = measurement.outcome_probabilities(big, prod)
        worst = 0.0
        for label, p_full in zip(prod.labels, full):
            worst = max(worst, abs(measurement.string_probability(rho, fam, label) - p_full))
        case = {"name": name, "strings": len(prod.labels), "max_abs_difference": worst}
        if name == "maximally_mixed":
            case["max_abs_difference_from_uniform"] = float(np.max(np.abs(full - 2.0**-n)))
            worst = max(worst, case["max_abs_difference_from_uniform"])
        ok = ok and worst <= cfg["tol"]
        results["cases"].append(case)
    print(f"oracle enum n={n}: {'agree' if ok else 'DISAGREE'}", file=sys.stderr)
    return results, ok


COMMANDS = {
    "verify-nosignaling": cmd_verify_nosignaling,
    "scenarios": cmd_scenarios,
    "channel run": cmd_channel_run,
    "randomness analyze": cmd_randomness_analyze,
    "measure sample": cmd_measure_sample,
    "oracle enum": cmd_oracle_enum,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) or math.isinf(x) else x
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def render_report(command: str, cfg: dict, results: dict, runtime_ms: float | None) -> str:
    report = {"command": command, "config": cfg, "results": results, "runtime_ms": runtime_ms, "seed": cfg.get("seed")}
    return json.dumps(_jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    command = args.command + (f" {args.action}" if getattr(args, "action", None) else "")
    no_timing = getattr(args, "no_timing", False)
    for attr in ("command", "action", "no_timing"):
        if hasattr(args, attr):
            delattr(args, attr)
    start = time.perf_counter()
    try:
        cfg = _merge(command, args)
        results, ok = COMMANDS[command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    runtime = None if no_timing else round((time.perf_counter() - start) * 1000, 3)
    text = render_report(command, cfg, results, runtime)
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_VIOLATION


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
