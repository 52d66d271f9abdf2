"""How the angular triplet-center loss reacts to a feature's position.

A 2-D feature is swept around the unit circle between two class centers.
The loss is flat at zero inside the margin and grows linearly in angle
outside it, unlike the cosine variant which saturates near the centers.
"""

import numpy as np

from atcl import CenterBank, MarginConfig, atcl, cosine_tcl

bank = CenterBank(np.array([[1.0, 0.0], [0.0, 1.0]]))
cfg = MarginConfig(m=0.7)

print(f"{'theta':>6} {'alpha':>6} {'beta':>6} {'angular':>8} {'cosine':>7}")
for theta in np.linspace(0, np.pi / 2, 10):
    f = [[np.cos(theta), np.sin(theta)]]
    a = atcl(f, [1], bank, cfg)
    c = cosine_tcl(f, [1], bank, cfg)
    print(f"{theta:6.3f} {a.alpha[0]:6.3f} {a.beta[0]:6.3f} {a.loss:8.4f} {c.loss:7.4f}")

# feature length does not matter, only its direction
f = np.array([[0.6, 0.8]])
print("scaled x1000, same loss:", atcl(f, [1], bank, cfg).loss == atcl(1000 * f, [1], bank, cfg).loss)
