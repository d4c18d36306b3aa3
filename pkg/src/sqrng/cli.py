"""Command-line driver: ``sqrng {simulate,rate,curve,verify-reduction,extract,replay}``.

Exit codes: 0 success, 1 protocol-level abort, 2 invalid input, 3 verification
failure. Every run that writes an artifact also writes a JSON manifest
(``<out>.manifest.json`` unless ``--manifest`` is given) from which
``sqrng replay`` reproduces it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import (
    CollectiveAttack,
    GeneralAttack,
    InvalidAttackError,
    exact_conditional_entropy,
    sample_random_attack,
    stats_from_attack,
    verify_reduction,
)
from .bits import as_bits, bits_to_str, int_to_bits
from .extract import ExtractionConfig, extract, read_bits_file, write_bits_file
from .protocol import ProtocolConfig, Transcript, run_protocol
from .rate import (
    MESSAGES,
    ChannelModel,
    InconsistentStatisticsError,
    ObservedStats,
    depolarization_stats,
    entropy_bound,
    rate_curve,
    write_curve_csv,
)
from .streams import substream

EXIT_OK, EXIT_ABORT, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2, 3


class InputError(Exception):
    """Bad user input that should end the run with exit code 2."""


def _dump_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# commands; each returns (exit code, input paths, output paths)


def cmd_simulate(args):
    try:
        config = ProtocolConfig(args.rounds, args.tests, ChannelModel(args.q, args.mode), args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    tr = run_protocol(config, workers=args.workers)
    if tr.stats is None:
        print(f"statistics: missing ({tr.missing} rounds)")
    else:
        s = tr.stats
        for a in (0, 1):
            for c in (0, 1):
                print(f"P[a={a},c={MESSAGES[c]}] = {s.p_ac[a, c]:.6f}")
        print(f"P[+|acc] = {s.p_plus_acc:.6f}")
        print(f"P[-|acc] = {s.p_minus_acc:.6f}")
    print(f"raw bits = {tr.raw.size}")
    print(f"seed_cost_bits = {tr.seed_cost_bits:.6f}")
    outputs = []
    if args.out:
        _dump_json(args.out, tr.to_dict(keep_rounds=args.keep_rounds))
        outputs.append(args.out)
    return EXIT_OK, [], outputs


def cmd_rate(args):
    inputs = []
    exact = None
    if args.stats:
        inputs.append(args.stats)
        try:
            stats = ObservedStats.from_dict(_load_json(args.stats))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed statistics file: {exc}") from None
    elif args.attack_file:
        inputs.append(args.attack_file)
        try:
            attack = CollectiveAttack.from_dict(_load_json(args.attack_file))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed collective attack file: {exc}") from None
        stats = stats_from_attack(attack)
        exact = exact_conditional_entropy(attack)
    else:
        if args.q is None:
            raise InputError("give --stats, --attack-file, or --q")
        try:
            stats = depolarization_stats(ChannelModel(args.q, args.mode))
        except ValueError as exc:
            raise InputError(str(exc)) from None
    try:
        report = entropy_bound(stats)
    except InconsistentStatisticsError as exc:
        raise InputError(f"inconsistent statistics: {exc}") from None
    print(f"lambda+ = {report.lam[0]:.6f}")
    print(f"lambda- = {report.lam[1]:.6f}")
    print(f"term+ = {report.term[0]:.6f}")
    print(f"term- = {report.term[1]:.6f}")
    print(f"bound = {report.bound:.6f}")
    if exact is not None:
        print(f"exact S(A|CE) = {exact:.6f}")
    print(f"abort = {str(report.abort).lower()}")
    outputs = []
    if args.out:
        body = report.to_dict()
        if exact is not None:
            body["exact_conditional_entropy"] = exact
        _dump_json(args.out, body)
        outputs.append(args.out)
    return (EXIT_ABORT if report.abort else EXIT_OK), inputs, outputs


def cmd_curve(args):
    if args.steps < 2:
        raise InputError("--steps must be at least 2")
    if not 0.0 <= args.q_min <= args.q_max <= 0.5:
        raise InputError("need 0 <= --q-min <= --q-max <= 0.5")
    grid = np.linspace(args.q_min, args.q_max, args.steps)
    modes = ["dependent", "independent"] if args.mode == "both" else [args.mode]
    out = Path(args.out)
    outputs = []
    for mode in modes:
        path = out if len(modes) == 1 else out.with_name(f"{out.stem}_{mode}{out.suffix}")
        rows = rate_curve(grid, mode)
        write_curve_csv(path, rows)
        outputs.append(str(path))
        mid = min(rows, key=lambda r: abs(r.q - 0.1))
        print(f"{mode}: {len(rows)} rows -> {path} (Q={mid.q:g}: rate {mid.rate:.6f})")
    return EXIT_OK, [], outputs


def cmd_verify_reduction(args):
    inputs = []
    jobs = []
    if args.attack_file:
        inputs.append(args.attack_file)
        data = _load_json(args.attack_file)
        blobs = data["attacks"] if isinstance(data, dict) and "attacks" in data else [data]
        try:
            attacks = [GeneralAttack.from_dict(b) for b in blobs]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid attack file: {exc}") from None
        for attack in attacks:
            if args.theta:
                try:
                    theta = as_bits(args.theta)
                except ValueError as exc:
                    raise InputError(str(exc)) from None
                if theta.size != attack.rounds:
                    raise InputError(f"--theta has {theta.size} bits, attack has {attack.rounds} rounds")
                jobs.append((attack, theta))
            else:
                jobs.extend((attack, int_to_bits(t, attack.rounds)) for t in range(2**attack.rounds))
    else:
        if args.attacks < 1 or args.rounds_max < 1 or args.dout < 1:
            raise InputError("--attacks, --rounds-max and --dout must be positive")
        rng = substream(args.seed, "attacks")
        for _ in range(args.attacks):
            n = int(rng.integers(1, args.rounds_max + 1))
            d = int(rng.integers(1, args.dout + 1))
            try:
                attack = sample_random_attack(n, d, rng)
            except ValueError as exc:
                raise InputError(str(exc)) from None
            jobs.append((attack, rng.integers(0, 2, n).astype(np.uint8)))
    results = []
    for attack, theta in jobs:
        r = verify_reduction(attack, theta, args.tol)
        results.append({"rounds": attack.rounds, "d_out": attack.d_out, "theta": bits_to_str(theta), **r.to_dict()})
    worst_dev = max(abs(r["accept_probability"] - r["expected_accept"]) for r in results)
    min_fid = min(r["state_fidelity"] for r in results)
    n_fail = sum(not r["passed"] for r in results)
    for r in results[: 8 if len(results) > 8 else len(results)]:
        print(f"theta={r['theta']} accept={r['accept_probability']:.12f} expected={r['expected_accept']:.12f}")
    print(f"checked {len(results)} (attack, schedule) pairs")
    print(f"worst accept-probability deviation = {worst_dev:.3e}")
    print(f"minimum fidelity = {min_fid:.15f}")
    print(f"failures = {n_fail}")
    outputs = []
    if args.out:
        _dump_json(
            args.out,
            {"worst_accept_deviation": worst_dev, "min_fidelity": min_fid, "failures": n_fail, "results": results},
        )
        outputs.append(args.out)
    return (EXIT_VERIFY if n_fail else EXIT_OK), inputs, outputs


def cmd_extract(args):
    inputs = [args.transcript]
    try:
        tr = Transcript.from_dict(_load_json(args.transcript))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed transcript: {exc}") from None
    if args.hash_seed:
        inputs.append(args.hash_seed)
        try:
            seed = read_bits_file(args.hash_seed)
        except (OSError, ValueError) as exc:
            raise InputError(f"malformed hash seed file: {exc}") from None
    else:
        seed = args.seed
    try:
        config = ExtractionConfig(args.margin, args.threshold_qfr, seed)
        result = extract(tr, config)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if result.aborted:
        print(f"aborted: {result.reason}")
        return EXIT_ABORT, inputs, []
    write_bits_file(args.out, result.output)
    print(f"n_raw = {tr.raw.size}")
    print(f"rate = {result.rate_used:.6f}")
    print(f"ell = {result.ell}")
    return EXIT_OK, inputs, [args.out]


def cmd_replay(args):
    manifest = _load_json(args.manifest)
    try:
        params = manifest["params"]
        command = manifest["command"]
    except KeyError as exc:
        raise InputError(f"malformed manifest: missing {exc}") from None
    ns = argparse.Namespace(**params)
    ns.manifest = None
    ns.no_manifest = True
    code, _, outputs = COMMANDS[command](ns)
    if not args.check:
        return code, [], outputs
    mismatched = [
        p for p, digest in manifest.get("outputs", {}).items() if not Path(p).exists() or _sha256(p) != digest
    ]
    for p in mismatched:
        print(f"checksum mismatch: {p}")
    if code != manifest.get("exit_code", code):
        print(f"exit code {code} differs from recorded {manifest['exit_code']}")
        return EXIT_VERIFY, [], outputs
    if mismatched:
        return EXIT_VERIFY, [], outputs
    print("replay reproduced all recorded outputs")
    return code, [], outputs


COMMANDS = {
    "simulate": cmd_simulate,
    "rate": cmd_rate,
    "curve": cmd_curve,
    "verify-reduction": cmd_verify_reduction,
    "extract": cmd_extract,
    "replay": cmd_replay,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqrng", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
        p.add_argument("--no-manifest", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("simulate", help="simulate the protocol with an honest server")
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--tests", type=int, required=True, help="number of Reflect rounds")
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--mode", choices=["dependent", "independent"], default="dependent")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--keep-rounds", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    common(p)

    p = sub.add_parser("rate", help="entropy bound from statistics")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--stats", help="statistics JSON file")
    src.add_argument("--attack-file", help="collective attack JSON file")
    p.add_argument("--q", type=float)
    p.add_argument("--mode", choices=["dependent", "independent"], default="dependent")
    p.add_argument("--out")
    common(p)

    p = sub.add_parser("curve", help="rate versus depolarization, as CSV")
    p.add_argument("--q-min", type=float, default=0.0)
    p.add_argument("--q-max", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--mode", choices=["dependent", "independent", "both"], default="both")
    p.add_argument("--out", required=True)
    common(p)

    p = sub.add_parser("verify-reduction", help="check the entanglement-based reduction numerically")
    p.add_argument("--attacks", type=int, default=100)
    p.add_argument("--rounds-max", type=int, default=3)
    p.add_argument("--dout", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attack-file")
    p.add_argument("--theta", help="schedule for --attack-file (default: every schedule)")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out")
    common(p)

    p = sub.add_parser("extract", help="privacy amplification of a transcript's raw string")
    p.add_argument("--transcript", required=True)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--hash-seed", help="seed bits file (ell=<n> header + hex)")
    p.add_argument("--seed", type=int, default=0, help="derive the hash seed from this value")
    p.add_argument("--threshold-qfr", type=float)
    p.add_argument("--out", required=True)
    common(p)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--check", action="store_true", help="compare output checksums with the manifest")
    return parser


def _write_manifest(args, code: int, inputs, outputs) -> None:
    if getattr(args, "no_manifest", False) or args.command == "replay":
        return
    path = args.manifest or (f"{outputs[0]}.manifest.json" if outputs else None)
    if path is None:
        return
    params = {k: v for k, v in vars(args).items() if k not in ("func", "manifest", "no_manifest")}
    _dump_json(
        path,
        {
            "command": args.command,
            "params": params,
            "seed": params.get("seed"),
            "inputs": {p: _sha256(p) for p in inputs},
            "outputs": {p: _sha256(p) for p in outputs},
            "exit_code": code,
            "version": __version__,
        },
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, inputs, outputs = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InvalidAttackError as exc:
        print(f"error: invalid attack: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _write_manifest(args, code, inputs, outputs)
    return code


if __name__ == "__main__":
    sys.exit(main())
