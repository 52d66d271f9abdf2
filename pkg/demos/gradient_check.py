"""Compare analytic loss gradients with central differences."""

import numpy as np

from atcl import MarginConfig, atcl, init_centers

rng = np.random.default_rng(0)
bank = init_centers(K=5, n=8, seed=1)
F = rng.normal(size=(6, 8))
y = rng.integers(1, 6, size=6)
cfg = MarginConfig(0.7)

out = atcl(F, y, bank, cfg)
h = 1e-6
num = np.zeros_like(F)
for idx in np.ndindex(F.shape):
    step = np.zeros_like(F)
    step[idx] = h
    num[idx] = (atcl(F + step, y, bank, cfg).loss - atcl(F - step, y, bank, cfg).loss) / (2 * h)

err = np.linalg.norm(num - out.grad_features) / max(np.linalg.norm(num), 1e-12)
print("active samples:", int(out.active.sum()), "of", len(y))
print(f"relative error: {err:.2e}")
