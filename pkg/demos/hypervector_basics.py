# Hypervector basics: random vectors, binding, bundling, permutation, and the
# level memories used to encode accelerometer values.
# Run with: python3 demos/hypervector_basics.py

import numpy as np

from hdgesture import hv
from hdgesture.memories import CimParams, build_cim, build_item_memory

rng = hv.make_rng(0)
D = 10_000

# two independent random vectors sit about half the dimensions apart
a = hv.random_hv(rng, D)
b = hv.random_hv(rng, D)
print("random pair distance", hv.hamming(a, b))

# binding is its own inverse and keeps distances
c = hv.random_hv(rng, D)
print("unbind recovers a:", hv.bind(hv.bind(a, c), c) == a)
print("distance before/after binding", hv.hamming(a, b), hv.hamming(hv.bind(a, c), hv.bind(b, c)))

# a bound vector looks unrelated to its inputs
print("bind(a, c) vs a", hv.hamming(hv.bind(a, c), a))

# bundling keeps every input close: 5 inputs -> ~0.3125 to each
xs = [hv.random_hv(rng, D) for _ in range(5)]
s = hv.bundle(xs, rng)
print("bundle of 5 -> distances", [round(hv.hamming(s, x), 4) for x in xs])

# permutation gives a near-orthogonal copy; rotating back undoes it
p = hv.permute(a, 1)
print("permuted distance", hv.hamming(a, p), "undo:", hv.permute(p, D - 1) == a)

# the item memory holds one random vector per electrode channel
im = build_item_memory(64, D, seed=1)
d = im.pairwise_distances()
print("item memory off-diagonal range", d[~np.eye(64, dtype=bool)].min(), d.max())

# a continuous item memory: neighbouring levels are close, the ends are d_max apart
cim = build_cim(CimParams(14, 0.6), D, seed=2)
row = cim.pairwise_distances()[0]
print("distance from level 0 to each level:")
print(np.round(row, 3))
