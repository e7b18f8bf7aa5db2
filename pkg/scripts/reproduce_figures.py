"""Run every figure preset through the CLI and summarize divergence sets.

    python3 scripts/reproduce_figures.py [--out DIR] [--seed N] [--jobs N]
"""
import argparse
import json
from pathlib import Path

from bhdisorder import cli


def summarize(out: Path):
    for path in sorted(out.glob("curve*.json")):
        doc = json.loads(path.read_text())
        pts = doc["points"]
        div = [p["rho"] for p in pts if p["status"] == "divergent"]
        conv = [p["beta_c"] for p in pts if p["status"] == "converged"]
        lo = f"{min(conv):.4f}" if conv else "-"
        print(f"  {path.stem:<22} converged {len(conv):>3}  min beta_c {lo:>8}  "
              f"divergent at {div if len(div) <= 6 else f'{len(div)} points'}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("out/figures"))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--presets", nargs="*", default=sorted(cli.PRESETS))
    args = ap.parse_args()
    for name in args.presets:
        out = args.out / name
        code = cli.main(["curve", "--preset", name, "--seed", str(args.seed),
                         "--jobs", str(args.jobs), "--out", str(out)])
        print(f"{name}: exit {code}")
        summarize(out)


if __name__ == "__main__":
    main()
