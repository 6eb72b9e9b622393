#!/usr/bin/env python3
"""Generate the synthetic two-cluster demo region and a ready-to-run manifest.

Writes cases.csv, mobility.csv, population.csv, states.csv, commute.csv and
census.csv plus manifest.json into the output directory, so the whole
pipeline runs with:

    python scripts/make_synthetic_data.py --out demo
    epicast run --manifest demo/manifest.json
    epicast serve --manifest demo/manifest.json
"""
import argparse
import json
from pathlib import Path

from epicast.synthetic import demo_dataset


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo", help="output directory")
    ap.add_argument("--days", type=int, default=140,
                    help="length of the observed window")
    ap.add_argument("--seed", type=int, default=0,
                    help="observation-noise seed")
    ap.add_argument("--horizon", type=int, default=28,
                    help="forecast horizon recorded in the manifest")
    args = ap.parse_args()

    outdir = Path(args.out)
    meta = demo_dataset(outdir, n_days=args.days, seed=args.seed)

    manifest = {
        "data": {
            "cases": "cases.csv",
            "commute": "commute.csv",
            "population": "population.csv",
            "mobility": "mobility.csv",
            "states": "states.csv",
            "census": "census.csv",
        },
        "artifact_root": "artifacts",
        "horizon": args.horizon,
        "workers": 2,
        "fit": {"initializer_count": 6, "max_iterations": 80, "top_k": 3},
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")

    clusters = ", ".join(
        f"{cid} ({len(info['members'])} counties, pop {info['population']:,.0f})"
        for cid, info in sorted(meta["truth"].items()))
    print(f"wrote {args.days}-day dataset to {outdir}/: {clusters}")
    print(f"manifest: {outdir / 'manifest.json'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
