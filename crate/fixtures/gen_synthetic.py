"""Writes synthetic-150.graph: 150 units, 300 prerequisite edges.

Deterministic; rerun only if the generator changes.
"""
import random

rng = random.Random(150)
N, E = 150, 300
ids = [f"u{i:03d}" for i in range(1, N + 1)]
edges = {}
for j in range(1, N):
    lo = max(0, j - 12)
    edges[(rng.randrange(lo, j), j)] = "required"
while len(edges) < E:
    i = rng.randrange(0, N - 1)
    j = rng.randrange(i + 1, min(N, i + 25))
    if (i, j) not in edges:
        edges[(i, j)] = "optional" if rng.random() < 0.15 else "required"

groups = {}
heads = sorted({j for (_, j) in edges})
rng.shuffle(heads)
for h in heads:
    members = sorted(i for (i, j), k in edges.items() if j == h and k == "required")
    if len(members) >= 2 and len(groups) < 6:
        g = f"g_{ids[h]}"
        groups[g] = h
        edges[(members[0], h)] = f"required alt:{g}"
        edges[(members[1], h)] = f"alt:{g}"

with open("synthetic-150.graph", "w") as out:
    out.write("# generated by gen_synthetic.py\ngraph synthetic\nmeta version 1\n\n")
    for n, nid in enumerate(ids):
        out.write(f"node {nid} | Unità {n + 1} | k{n // 10 + 1:02d} | {rng.randrange(20, 61, 5)} | -\n")
    out.write("\n")
    for (i, j), kind in sorted(edges.items()):
        out.write(f"edge {ids[i]} -> {ids[j]} {kind}\n")
    out.write("\n")
    for g, h in sorted(groups.items()):
        out.write(f"group {g} {ids[h]}\n")
