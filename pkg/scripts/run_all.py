"""Run every CLI experiment with its shipped config and print one line per verb.

    python3 scripts/run_all.py [--out-dir runs] [--only sweep-n,tail]
"""

import argparse
import json
import sys
import time
from pathlib import Path

from mrelab.labctl.cli import run

ROOT = Path(__file__).resolve().parent.parent
JOBS = [
    ("exact", "exact.cfg"),
    ("qne-run", "qne-run.cfg"),
    ("sweep-n", "sweep-n.cfg"),
    ("sweep-n", "sweep-n-renyi.cfg"),
    ("tail", "tail.cfg"),
    ("perminv", "perminv.cfg"),
    ("props", "props.cfg"),
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="runs")
    ap.add_argument("--only", default="", help="comma-separated verbs")
    args = ap.parse_args()
    only = {v for v in args.only.split(",") if v}
    overview = []
    for verb, cfg in JOBS:
        if only and verb not in only:
            continue
        out = Path(args.out_dir) / Path(cfg).stem
        t0 = time.perf_counter()
        code = run([verb, "--config", str(ROOT / "configs" / cfg), "--out-dir", str(out)])
        overview.append({"verb": verb, "config": cfg, "exit_code": code, "seconds": round(time.perf_counter() - t0, 1)})
        print(f"== {verb} ({cfg}): exit {code} in {overview[-1]['seconds']}s", flush=True)
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    (Path(args.out_dir) / "overview.json").write_text(json.dumps(overview, indent=2) + "\n")
    return max((o["exit_code"] for o in overview), default=0)


if __name__ == "__main__":
    sys.exit(main())
