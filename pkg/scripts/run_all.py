#!/usr/bin/env python3
"""Run every config under configs/ and summarize the verdicts."""

import glob
import json
import os
import subprocess
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)


def main() -> int:
    workspace = sys.argv[1] if len(sys.argv) > 1 else os.path.join(ROOT, "workspace")
    worst = 0
    for path in sorted(glob.glob(os.path.join(ROOT, "configs", "*.toml"))):
        proc = subprocess.run(
            [sys.executable, "-m", "algebroids.cli",
             "--config", path, "--workspace", workspace],
            capture_output=True, text=True)
        label = os.path.basename(path)
        if proc.returncode >= 2:
            print(f"{label}: usage error\n{proc.stderr.strip()}")
            worst = max(worst, proc.returncode)
            continue
        report = json.loads(proc.stdout)
        statuses = {name: s["status"] for name, s in report["suites"].items()}
        print(f"{label}: {report['status']}  {statuses}")
        worst = max(worst, proc.returncode)
    return worst


if __name__ == "__main__":
    sys.exit(main())
