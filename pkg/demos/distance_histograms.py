"""Intra- versus inter-class cosine distances after training, as text bars."""

import numpy as np

from atcl import SynthConfig, TrainConfig, cosine_histograms, fit, forward, generate

data = generate(SynthConfig(seed=0))
test = data.subset("test")
res = fit(data, TrainConfig(loss_kind="atcl"))
hist = cosine_histograms(forward(res.model, test.X), test.labels, bins=20)

scale = 60 / max(hist.intra.max(), hist.inter.max())
for lo, a, b in zip(hist.edges[:-1], hist.intra, hist.inter):
    print(f"{lo:4.1f} intra {'#' * int(np.ceil(a * scale)):<60} inter {'#' * int(np.ceil(b * scale))}")
print(f"median intra {hist.intra_median:.3f}, median inter {hist.inter_median:.3f}")
