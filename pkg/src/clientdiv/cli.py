"""Command-line entry point.

Exit codes: 0 success, 1 domain error (bad proof, invalid registry, ...),
2 usage error (bad arguments, missing input file).
"""

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources

from clientdiv import __version__
from clientdiv.analysis import UnknownImpl, econ_report, slash_impact
from clientdiv.contract import DiversityContract
from clientdiv.identity import CodeSegment, CommitmentRegistry, IdentityError, build_registry
from clientdiv.proofs import (
    ExecutionProof,
    NodeKey,
    ProofError,
    ProofMechanism,
    TrustedKeys,
    generate_proof,
    verify_proof,
)
from clientdiv.sim import SCENARIOS, ConfigInvalid, ScenarioConfig, Simulation


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


@dataclass
class RunManifest:
    config_hash: str
    seed: int
    artifacts: list = field(default_factory=list)
    tool_version: str = __version__

    def write(self, out_dir):
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w") as f:
            json.dump(asdict(self), f, sort_keys=True, indent=1)
            f.write("\n")
        return path


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _write_json(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, sort_keys=True, indent=1)
        f.write("\n")


def emit_plot_data(series, path):
    """Long-format ``block,impl_id,count,share`` CSV, one row per block and impl."""
    if not series.rows:
        raise ValueError("series is empty")
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["block", "impl_id", "count", "share"])
        for row in series.rows:
            total = sum(row.counts)
            for impl, count in zip(series.impl_ids, row.counts):
                w.writerow([row.block, impl, count, repr(count / total) if total else "0.0"])
    return path


# -- commit / prove / verify ----------------------------------------------

def _parse_segment_arg(arg):
    """``IMPL:STEP=PATH``, or a bare path laid out as ``<impl>/<step>.<ext>``."""
    if "=" in arg and ":" in arg.split("=", 1)[0]:
        key, path = arg.split("=", 1)
        impl, step = key.split(":", 1)
    else:
        path = arg
        impl = os.path.basename(os.path.dirname(os.path.abspath(path)))
        step = os.path.splitext(os.path.basename(path))[0]
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")
    with open(path, "rb") as f:
        return CodeSegment(impl, step, f.read())


def cmd_commit(args):
    try:
        segments = [_parse_segment_arg(a) for a in args.files]
        registry = build_registry(segments)
    except IdentityError as exc:
        raise DomainError(str(exc)) from exc
    for ident in registry:
        print(f"{ident.impl_id} {ident.step_id} {ident.digest.hex()}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        doc = registry.to_list()
        path = os.path.join(args.out, "registry.json")
        _write_json(path, doc)
        RunManifest(hashlib.sha256(_canonical(doc)).hexdigest(), 0,
                    [path]).write(args.out)
    return 0


def _load_registry(path):
    try:
        with open(path) as f:
            return CommitmentRegistry.from_list(json.load(f))
    except FileNotFoundError:
        raise UsageError(f"no such registry file: {path}") from None
    except (IdentityError, KeyError, ValueError) as exc:
        raise DomainError(f"invalid registry {path}: {exc}") from exc


def cmd_prove(args):
    registry = _load_registry(args.registry)
    ident = registry.get(args.impl, args.step)
    if ident is None:
        raise DomainError(f"{args.impl}/{args.step} is not in the registry")
    key = NodeKey.from_seed(args.key_seed, args.key_index)
    proof = generate_proof(ProofMechanism.parse(args.mechanism), ident, args.block, key)
    with open(args.out, "wb") as f:
        f.write(proof.encode())
    print(json.dumps({"public_key": key.public.hex(), "node_addr": key.node_addr.hex(),
                      "proof": args.out}, sort_keys=True))
    return 0


def _load_trusted(args):
    keys = list(args.trusted_key or [])
    if args.trusted_keys:
        try:
            with open(args.trusted_keys) as f:
                keys.extend(json.load(f))
        except FileNotFoundError:
            raise UsageError(f"no such key file: {args.trusted_keys}") from None
    try:
        return TrustedKeys(bytes.fromhex(k) for k in keys)
    except ValueError as exc:
        raise UsageError(f"bad trusted key: {exc}") from None


def cmd_verify(args):
    registry = _load_registry(args.registry)
    trusted = _load_trusted(args)
    try:
        with open(args.proof, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise UsageError(f"no such proof file: {args.proof}") from None
    try:
        proof = ExecutionProof.decode(data)
        digest = verify_proof(registry, trusted, proof)
    except ProofError as exc:
        raise DomainError(f"{type(exc).__name__}: {exc}") from exc
    ident = registry.lookup(digest)
    print(json.dumps({"valid": True, "digest": digest.hex(), "impl_id": ident.impl_id,
                      "step_id": ident.step_id, "block": proof.block_number,
                      "submitter": proof.submitter.hex(),
                      "mechanism": proof.mechanism.name.lower()}, sort_keys=True))
    return 0


# -- simulate ----------------------------------------------------------------

def load_config(name):
    """Scenario config from a JSON file, or a bundled scenario by name."""
    if os.path.isfile(name):
        with open(name) as f:
            try:
                return ScenarioConfig.from_dict(json.load(f))
            except json.JSONDecodeError as exc:
                raise UsageError(f"{name}: not valid JSON: {exc}") from None
    stem = os.path.splitext(os.path.basename(name))[0]
    if stem in SCENARIOS and not os.path.dirname(name):
        bundled = resources.files("clientdiv").joinpath("scenarios", stem + ".json")
        return ScenarioConfig.from_dict(json.loads(bundled.read_text()))
    raise UsageError(f"no such config file: {name}")


def simulate_to_dir(config, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    simulation = Simulation(config)
    series = simulation.run()
    paths = {
        "series.csv": os.path.join(out_dir, "series.csv"),
        "plot.csv": os.path.join(out_dir, "plot.csv"),
        "series.json": os.path.join(out_dir, "series.json"),
        "config.json": os.path.join(out_dir, "config.json"),
        "contract.json": os.path.join(out_dir, "contract.json"),
    }
    series.write_csv(paths["series.csv"])
    emit_plot_data(series, paths["plot.csv"])
    series.write_json(paths["series.json"])
    _write_json(paths["config.json"], config.to_dict())
    _write_json(paths["contract.json"], simulation.contract.snapshot())
    RunManifest(hashlib.sha256(config.canonical_bytes()).hexdigest(), config.seed,
                sorted(os.path.basename(p) for p in paths.values())).write(out_dir)
    return out_dir


def _parse_seed_range(text):
    lo, sep, hi = text.partition("..")
    try:
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise UsageError(f"--seeds expects A..B, got {text!r}") from None
    if not sep or hi < lo:
        raise UsageError(f"--seeds expects A..B with A <= B, got {text!r}")
    return range(lo, hi + 1)


def cmd_simulate(args):
    try:
        config = load_config(args.config)
    except ConfigInvalid as exc:
        raise DomainError(str(exc)) from exc
    if args.seeds:
        seeds = _parse_seed_range(args.seeds)
        jobs = [(config.with_seed(s), os.path.join(args.out, f"seed-{s}")) for s in seeds]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                done = list(pool.map(simulate_to_dir, *zip(*jobs)))
        else:
            done = [simulate_to_dir(c, d) for c, d in jobs]
        for d in done:
            print(d)
        return 0
    if args.seed is not None:
        config = config.with_seed(args.seed)
    print(simulate_to_dir(config, args.out))
    return 0


# -- analyze / contract ------------------------------------------------------

def _parse_counts(text):
    counts = {}
    for part in text.split(","):
        impl, sep, n = part.partition("=")
        if not sep or not impl:
            raise UsageError(f"--counts expects IMPL=N,..., got {text!r}")
        try:
            counts[impl.strip()] = int(n)
        except ValueError:
            raise UsageError(f"bad count {n!r} for {impl}") from None
    return counts


def _parse_number(text):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise UsageError(f"not a number: {text!r}") from None


def _emit(report, out):
    print(json.dumps(report, sort_keys=True))
    if out:
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, "report.json")
        _write_json(path, report)
        RunManifest(hashlib.sha256(_canonical(report)).hexdigest(), 0, [path]).write(out)


def cmd_analyze_slash(args):
    try:
        report = slash_impact(_parse_counts(args.counts), args.buggy).to_dict()
    except (UnknownImpl, ValueError) as exc:
        raise DomainError(f"cannot analyze: {exc}") from exc
    _emit(report, args.out)
    return 0


def cmd_analyze_econ(args):
    try:
        mech = ProofMechanism.parse(args.mechanism)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    gas_price = _parse_number(args.gas_price)
    try:
        report = econ_report(mech, gas_price, args.block_time)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    _emit(report, args.out)
    return 0


def cmd_contract_inspect(args):
    try:
        with open(args.snapshot) as f:
            snap = json.load(f)
    except FileNotFoundError:
        raise UsageError(f"no such snapshot: {args.snapshot}") from None
    try:
        contract = DiversityContract.from_snapshot(snap)
    except (KeyError, ValueError, TypeError) as exc:
        raise DomainError(f"invalid snapshot: {exc}") from exc
    dist = contract.get_distribution()
    print(json.dumps({
        "current_block": contract.current_block,
        "treasury": contract.treasury,
        "distribution": {k: float(v) for k, v in dist.items()},
        "minority": contract.get_minority(),
    }, sort_keys=True))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="clientdiv", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("commit", help="commit code segments and print their digests")
    c.add_argument("files", nargs="+", metavar="FILE",
                   help="IMPL:STEP=PATH, or PATH laid out as <impl>/<step>.<ext>")
    c.add_argument("--out", help="write registry.json and manifest.json here")
    c.set_defaults(func=cmd_commit)

    pr = sub.add_parser("prove", help="generate a simulated proof of execution")
    pr.add_argument("--registry", required=True)
    pr.add_argument("--impl", required=True)
    pr.add_argument("--step", required=True)
    pr.add_argument("--block", type=int, required=True)
    pr.add_argument("--key-seed", type=int, required=True)
    pr.add_argument("--key-index", type=int, default=0)
    pr.add_argument("--mechanism", default="attested", choices=["attested", "succinct"])
    pr.add_argument("--out", required=True, help="proof output file")
    pr.set_defaults(func=cmd_prove)

    v = sub.add_parser("verify", help="verify an encoded proof against a registry")
    v.add_argument("proof")
    v.add_argument("--registry", required=True)
    v.add_argument("--trusted-keys", help="JSON list of hex public keys")
    v.add_argument("--trusted-key", action="append", help="hex public key (repeatable)")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="run an agent simulation")
    s.add_argument("--config", required=True,
                   help="scenario JSON file, or a bundled name such as scenario-70-20-10.json")
    s.add_argument("--seed", type=int)
    s.add_argument("--seeds", help="run seeds A..B into <out>/seed-N")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="resilience and cost analysis")
    asub = a.add_subparsers(dest="analysis", required=True)
    sl = asub.add_parser("slash", help="impact of a bug in one implementation")
    sl.add_argument("--counts", required=True, help="IMPL=N,...")
    sl.add_argument("--buggy", required=True)
    sl.add_argument("--out")
    sl.set_defaults(func=cmd_analyze_slash)
    ec = asub.add_parser("econ", help="proving feasibility and break-even reward")
    ec.add_argument("--mechanism", required=True)
    ec.add_argument("--gas-price", required=True)
    ec.add_argument("--block-time", type=float, default=12.0)
    ec.add_argument("--out")
    ec.set_defaults(func=cmd_analyze_econ)

    k = sub.add_parser("contract", help="contract state tools")
    ksub = k.add_subparsers(dest="contract_cmd", required=True)
    ins = ksub.add_parser("inspect", help="print distribution and minority of a snapshot")
    ins.add_argument("snapshot")
    ins.set_defaults(func=cmd_contract_inspect)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"clientdiv: error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"clientdiv: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
