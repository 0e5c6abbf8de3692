#!/usr/bin/env python3
"""Convert the classic citation-network text format into the JSON bundle the
`fedgat` CLI loads (--dataset json --bundle ...).

Input files (e.g. the public Cora distribution):
  <name>.content : one line per paper: id, w_0 ... w_{D-1}, class_label
  <name>.cites   : one line per citation: cited_id citing_id

Features are folded into a fixed dimension with the hashing trick
(column index mod dim, summed), then L2-clamped by the loader. The split is
stratified by class: 20 train nodes per class, then 500 validation and 1000
test nodes in node order, mirroring the usual semi-supervised protocol.
"""

import argparse
import json
import sys


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--content", required=True)
    ap.add_argument("--cites", required=True)
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--train-per-class", type=int, default=20)
    ap.add_argument("--val", type=int, default=500)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    ids = []
    rows = []
    labels_raw = []
    with open(args.content) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) < 3:
                continue
            ids.append(parts[0])
            rows.append([float(x) for x in parts[1:-1]])
            labels_raw.append(parts[-1])

    index = {node_id: i for i, node_id in enumerate(ids)}
    classes = sorted(set(labels_raw))
    class_of = {name: i for i, name in enumerate(classes)}
    labels = [class_of[value] for value in labels_raw]

    n = len(ids)
    dim = args.dim
    features = [0.0] * (n * dim)
    for i, row in enumerate(rows):
        for j, value in enumerate(row):
            if value != 0.0:
                features[i * dim + (j % dim)] += value

    edges = set()
    skipped = 0
    with open(args.cites) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) != 2:
                continue
            if parts[0] not in index or parts[1] not in index:
                skipped += 1
                continue
            u, v = index[parts[0]], index[parts[1]]
            if u == v:
                continue
            edges.add((min(u, v), max(u, v)))

    per_class = {c: 0 for c in range(len(classes))}
    train, rest = [], []
    for i in range(n):
        if per_class[labels[i]] < args.train_per_class:
            per_class[labels[i]] += 1
            train.append(i)
        else:
            rest.append(i)
    val = rest[: args.val]
    test = rest[args.val : args.val + args.test]

    bundle = {
        "n_nodes": n,
        "feat_dim": dim,
        "n_classes": len(classes),
        "labels": labels,
        "features": features,
        "edges": sorted([list(e) for e in edges]),
        "train": train,
        "val": val,
        "test": test,
    }
    with open(args.out, "w") as fh:
        json.dump(bundle, fh)
    print(f"wrote {args.out}: n={n} d={dim} classes={len(classes)} edges={len(edges)} "
          f"(skipped {skipped} dangling citations)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
