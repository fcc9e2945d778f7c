#!/usr/bin/env python3
"""Convert a Planetoid citation dataset (ind.<name>.* files) into the edge
list and feature matrix read by `llp`.

    python3 tools/convert_planetoid.py RAW_DIR cora OUT_DIR

writes OUT_DIR/cora.edges ("u v" per line) and OUT_DIR/cora.features
("N F" header, then one row of F reals per node). Duplicate and reversed
pairs are left in; the loader removes them.
"""

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load(raw: Path, name: str, part: str):
    with open(raw / f"ind.{name}.{part}", "rb") as f:
        return pickle.load(f, encoding="latin1")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("raw_dir", type=Path)
    ap.add_argument("name", help="cora, citeseer or pubmed")
    ap.add_argument("out_dir", type=Path)
    args = ap.parse_args()

    allx = load(args.raw_dir, args.name, "allx")
    tx = load(args.raw_dir, args.name, "tx")
    graph = load(args.raw_dir, args.name, "graph")
    test_index = [int(line) for line in open(args.raw_dir / f"ind.{args.name}.test.index")]

    # Test rows are stored in sorted order; put each back at its node index.
    # Citeseer has isolated test ids without a row, which stay all-zero.
    lo, hi = min(test_index), max(test_index)
    tx_full = sp.lil_matrix((hi - lo + 1, tx.shape[1]))
    tx_full[np.array(sorted(test_index)) - lo, :] = tx
    features = sp.vstack((allx, tx_full)).tolil()
    features[test_index, :] = features[sorted(test_index), :]
    x = np.asarray(features.todense(), dtype=np.float64)

    n = x.shape[0]
    args.out_dir.mkdir(parents=True, exist_ok=True)
    edges = 0
    with open(args.out_dir / f"{args.name}.edges", "w") as f:
        for u, nbrs in graph.items():
            for v in nbrs:
                if u < n and v < n:
                    f.write(f"{u} {v}\n")
                    edges += 1
    with open(args.out_dir / f"{args.name}.features", "w") as f:
        f.write(f"{n} {x.shape[1]}\n")
        for row in x:
            f.write(" ".join(f"{v:g}" for v in row) + "\n")
    print(f"{args.name}: {n} nodes, {x.shape[1]} features, {edges} directed pair lines", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
