# Four ways to make a gesture classifier robust to arm posture, compared on a
# small synthetic dataset. Takes about a minute.
# Run with: python3 demos/limb_position_classifiers.py

import numpy as np

from hdgesture import architectures as A
from hdgesture import datagen

# 13 gestures x 8 arm positions x 3 repetitions, 30 windows each
cfg = datagen.GenConfig(windows_per_rep=30, seed=0)
ds = datagen.generate(cfg)
print(len(ds), "windows,", ds.mav.shape[1], "EMG channels")

# accelerometer means per position; positions 0 and 4 point almost the same way
for p in range(cfg.n_positions):
    print("position", p, np.round(ds.accel[ds.position == p].mean(axis=0), 3))

# encode once: spatial bundling over channels, then 5-window temporal binding
enc = A.encode(ds, seed=0)
print(len(enc), "encoded samples")

# 10-fold cross-validation, reusing the per-fold sums for every architecture
cv = A.CrossValidator(enc, k=10, seed=0)
for arch in ["direct", "dual", "ctx-ortho", "ctx-cim"]:
    r = cv.run(arch)
    worst = min(r.per_position, key=r.per_position.get)
    print(f"{arch:9s} accuracy {r.accuracy:.4f}  (worst position {worst}: {r.per_position[worst]:.3f})")

# parameter memory of each trained model, in bits
for arch in ["direct", "dual", "ctx-ortho", "ctx-cim"]:
    fp = A.footprint_bits(A.train(arch, enc))
    print(f"{arch:9s} {fp.total_bits:>9d} bits")

# how far apart the accelerometer contexts of the eight positions are
model = A.train("ctx-cim", enc)
print(np.round(A.context_distance_matrix(model, enc), 3))

# online learning: fold in new samples without retraining
first = enc.subset(np.flatnonzero(enc.repetition < 2))
later = enc.subset(np.flatnonzero(enc.repetition == 2))
m = A.update(A.train("ctx-ortho", first), later)
print("after update:", A.evaluate(m, enc).accuracy)
