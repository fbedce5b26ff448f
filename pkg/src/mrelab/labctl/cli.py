"""Command-line entry point: ``mrelab <verb> [--seed S] [--out-dir D] [--threads T] [--config FILE] [--set k=v ...]``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .. import __version__
from ..errors import ConfigError, MreError
from .config import PREFIX, SECTIONS, apply_flat, check_known_prefixes, load_flat, parse_flat, to_flat
from .experiments import COMMANDS
from .io import RunManifest, now_iso, write_report

ENV_THREADS = "MRE_LAB_THREADS"


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=default, help="master seed (default 0)")
    p.add_argument("--out-dir", default=default, help="output directory (default runs/<verb>)")
    p.add_argument("--threads", type=int, default=default, help=f"worker threads (env {ENV_THREADS})")
    p.add_argument("--config", default=default, help="flat key=value config, or a run manifest (.json) to replay")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrelab", description="Exact and estimated measured relative entropies.")
    _global_flags(parser, suppress=False)
    parser.add_argument("--version", action="version", version=f"mrelab {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in COMMANDS:
        sp = sub.add_parser(verb, help=f"run the {verb} experiment")
        _global_flags(sp, suppress=True)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
    return parser


def resolve(args) -> tuple:
    """Merge config file, manifest and flags into (config dataclass, seed, threads)."""
    verb = args.verb
    prefix = PREFIX[verb]
    flat: dict = {}
    manifest_seed = None
    if args.config:
        path = Path(args.config)
        if path.suffix == ".json":
            try:
                man = RunManifest.from_json(path.read_text(encoding="utf-8"))
            except (OSError, ValueError, TypeError) as exc:
                raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
            if man.command != verb:
                raise ConfigError(f"manifest {path} is for '{man.command}', not '{verb}'")
            flat = {k: (v, 0) for k, v in man.config.items()}
            manifest_seed = man.master_seed
        else:
            flat = load_flat(path)
    if args.set:
        extra = parse_flat("\n".join(args.set), "--set")
        flat.update(extra)
    check_known_prefixes(flat, {prefix, "run"}, args.config or "--set")
    cfg = apply_flat(SECTIONS[verb](), flat, prefix, args.config or "--set")

    seed = args.seed
    if seed is None and "run.seed" in flat:
        seed = int(flat["run.seed"][0])
    if seed is None:
        seed = manifest_seed if manifest_seed is not None else 0
    threads = args.threads
    if threads is None and os.environ.get(ENV_THREADS):
        try:
            threads = int(os.environ[ENV_THREADS])
        except ValueError as exc:
            raise ConfigError(f"{ENV_THREADS} must be an integer") from exc
    if threads is None and "run.threads" in flat:
        threads = int(flat["run.threads"][0])
    return cfg, int(seed), max(1, int(threads or 1))


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, seed, threads = resolve(args)
        out_dir = Path(args.out_dir or Path("runs") / args.verb)
        flat_cfg = to_flat(cfg, PREFIX[args.verb])
        flat_cfg["run.seed"] = seed
        manifest = RunManifest(args.verb, flat_cfg, seed, __version__, started=now_iso())
        report = COMMANDS[args.verb](cfg, seed=seed, threads=threads)
        paths = write_report(report, out_dir, manifest)
    except MreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, ok in report.flags.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(json.dumps({"kind": report.kind, "passed": report.passed, "outputs": [str(p) for p in paths]}))
    return 0 if report.passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
