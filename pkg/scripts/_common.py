"""Shared helpers for the figure scripts: argument parsing and scenario runs."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from rydreg.config import load_config
from rydreg.output import read_csv
from rydreg.scenarios import RUNNERS

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG = ROOT / "configs" / "reference.toml"


def parse(description: str) -> argparse.Namespace:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--config", default=str(DEFAULT_CONFIG))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default=str(ROOT / "results"))
    p.add_argument("--no-plot", action="store_true", help="write CSVs only")
    return p.parse_args()


def run(name: str, args: argparse.Namespace):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out) / name
    res = RUNNERS[name](cfg, out)
    sys.stdout.write(res.summary())
    return res, out


def table(path: Path) -> tuple[list[str], list[list[str]]]:
    _, header, rows = read_csv(path)
    return header, rows


def pyplot(args):
    if args.no_plot:
        return None
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping the figure")
        return None
    return plt
