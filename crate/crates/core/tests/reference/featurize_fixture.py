"""Straight-line recomputation of the 15 word features for the fixed
8-record fixture used in tests/oracles.rs. Plain Python, no dependencies.

Run: python3 featurize_fixture.py
"""
import math

# (treated label, treated vector, matched label, matched vector)
RECORDS = [
    (+1, [1.0, 0.5, -0.25, 2.0], -1, [0.75, 0.5, 0.0, 1.5]),
    (+1, [0.25, -1.0, 1.5, 0.5], +1, [0.5, -0.75, 1.0, 0.25]),
    (-1, [2.0, 0.0, 0.25, -0.5], -1, [-1.0, 0.25, 0.5, 0.75]),
    (+1, [-0.5, 1.25, 0.75, 1.0], -1, [-0.25, 1.0, 1.0, 1.25]),
    (-1, [1.5, 1.5, -1.0, 0.0], +1, [1.25, 1.75, -0.5, -0.25]),
    (+1, [0.0, 0.75, 2.0, -1.5], -1, [0.5, -0.5, 0.25, 1.0]),
    (-1, [-1.25, -0.25, 0.5, 0.5], +1, [-1.0, -0.5, 0.25, 0.75]),
    (+1, [0.75, 2.0, 1.25, -0.75], -1, [0.5, 1.5, 1.5, -0.5]),
]
THETA = 1.375


def cos(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return dot / (nu * nv)


sims = [cos(t, m) for _, t, _, m in RECORDS]
effects = [yt - ym for yt, _, ym, _ in RECORDS]
n = len(RECORDS)

f1 = sum(effects) / n
w = [max(s, 0.0) for s in sims]
f2 = sum(a * b for a, b in zip(w, effects)) / sum(w)
order = sorted(range(n), key=lambda i: -sims[i])[:5]
f3 = sum(effects[i] for i in order) / 5
f4 = sum(sims) / n
f5 = sum(sims[i] for i in order) / 5
f6 = max(sims)
f7 = math.sqrt(sum((s - f4) ** 2 for s in sims) / n)
f8 = max(s for s, r in zip(sims, RECORDS) if r[2] == +1)
f9 = max(s for s, r in zip(sims, RECORDS) if r[2] == -1)
f10 = THETA
dim = 4
delta = [sum(t[d] - m[d] for _, t, _, m in RECORDS) / n for d in range(dim)]
f11 = math.sqrt(sum(d * d for d in delta))
mags = sorted((abs(d) for d in delta), reverse=True)
f12, f13, f14 = mags[:3]
f15 = max(abs(t[d] - m[d]) for _, t, _, m in RECORDS for d in range(dim))

for i, v in enumerate([f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13, f14, f15], 1):
    print(f"f{i} {v!r}")
