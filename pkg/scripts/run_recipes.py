"""Run every JSON recipe in recipes/ through the gmcons command line.

    python3 scripts/run_recipes.py [--outdir DIR]
"""

import argparse
import json
import os
from pathlib import Path

from gmconsensus.cli import main as gmcons

RECIPES = Path(__file__).resolve().parent.parent / "recipes"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    os.chdir(args.outdir)
    for path in sorted(RECIPES.glob("*.json")):
        command = json.loads(path.read_text())["command"].split()
        print(f"== {path.name}: gmcons {' '.join(command)}")
        code = gmcons(command + ["--config", str(path)])
        print(f"exit {code}")


if __name__ == "__main__":
    main()
