"""Synthetic clustered datasets on the unit sphere and a plain-text file format.

File format (one dataset per file)::

    dim=<D> count=<N>
    <label>,<v1> <v2> ... <vD>
    ...

Numbers are written with 17 significant digits so a write/read cycle is exact.
Split tags are not part of a file; a split lives in its own file.
"""

from dataclasses import dataclass
import os
import re

import numpy as np

from .errors import ConfigError, ParseError

SPLITS = ("train", "val", "test")
_HEADER = re.compile(r"^dim=(\d+) count=(\d+)$")


@dataclass(frozen=True)
class SynthConfig:
    K: int = 10
    per_class: int = 100
    D: int = 32
    spread: float = 0.25
    seed: int = 0
    min_angle: float = 0.3

    def __post_init__(self):
        if self.K < 2:
            raise ConfigError(f"K must be >= 2, got {self.K}")
        if self.per_class < 2:
            raise ConfigError(f"per_class must be >= 2, got {self.per_class}")
        if self.D < 2:
            raise ConfigError(f"D must be >= 2, got {self.D}")
        if not self.spread > 0:
            raise ConfigError(f"spread must be > 0, got {self.spread}")


@dataclass
class LabeledDataset:
    """Row vectors ``X`` (N, D) with 1-based integer ``labels``.

    ``split`` is an optional per-row array of ``"train"``/``"val"``/``"test"``.
    """

    X: np.ndarray
    labels: np.ndarray
    split: np.ndarray = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.X.shape[0] != self.labels.shape[0]:
            raise ValueError(f"{self.X.shape[0]} vectors but {self.labels.shape[0]} labels")
        if self.labels.size and self.labels.min() < 1:
            raise ValueError("labels must be >= 1")
        if self.split is not None:
            self.split = np.asarray(self.split, dtype=object)

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    @property
    def num_classes(self):
        return int(self.labels.max()) if len(self) else 0

    def subset(self, split):
        if self.split is None:
            raise ValueError("dataset carries no split tags")
        mask = self.split == split
        return LabeledDataset(self.X[mask], self.labels[mask])

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        same_split = (self.split is None and other.split is None) or (
            self.split is not None
            and other.split is not None
            and np.array_equal(self.split, other.split)
        )
        return (
            np.array_equal(self.X, other.X)
            and np.array_equal(self.labels, other.labels)
            and same_split
        )


def _unit_sphere(rng, size, D):
    v = rng.normal(size=(size, D))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _spaced_means(rng, K, D, min_angle, max_tries=10_000):
    means = []
    cos_max = np.cos(min_angle)
    tries = 0
    while len(means) < K:
        if tries >= max_tries:
            raise ConfigError(
                f"could not place {K} class means {min_angle} rad apart in {D} dims"
            )
        tries += 1
        cand = _unit_sphere(rng, 1, D)[0]
        if all(cand @ m <= cos_max for m in means):
            means.append(cand)
    return np.array(means)


def _perturb(rng, mean, count, spread):
    """Rotate ``mean`` by |N(0, spread)| radians toward random tangent directions."""
    D = mean.shape[0]
    t = rng.normal(size=(count, D))
    t -= np.outer(t @ mean, mean)
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    theta = np.abs(rng.normal(0.0, spread, size=count))
    return np.cos(theta)[:, None] * mean + np.sin(theta)[:, None] * t


def generate(cfg):
    """Draw a clustered dataset with an 80/10/10 train/val/test split per class."""
    rng = np.random.default_rng(cfg.seed)
    means = _spaced_means(rng, cfg.K, cfg.D, cfg.min_angle)
    n_train = int(round(0.8 * cfg.per_class))
    n_val = int(round(0.1 * cfg.per_class))
    split_tags = np.array(
        ["train"] * n_train + ["val"] * n_val + ["test"] * (cfg.per_class - n_train - n_val),
        dtype=object,
    )
    X, labels, split = [], [], []
    for k in range(cfg.K):
        directions = _perturb(rng, means[k], cfg.per_class, cfg.spread)
        scale = rng.uniform(0.5, 2.0, size=cfg.per_class)
        X.append(directions * scale[:, None])
        labels.append(np.full(cfg.per_class, k + 1))
        split.append(split_tags[rng.permutation(cfg.per_class)])
    return LabeledDataset(np.vstack(X), np.concatenate(labels), np.concatenate(split))


def format_row(label, vector):
    return f"{int(label)}," + " ".join(f"{x:.17g}" for x in vector)


def write_dataset(path, ds):
    lines = [f"dim={ds.dim} count={len(ds)}"]
    lines += [format_row(y, x) for y, x in zip(ds.labels, ds.X)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_dataset(path):
    """Parse a dataset file. Raises :class:`ParseError` with the offending line number."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("missing header", 1)
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise ParseError(f"bad header {lines[0]!r}, expected 'dim=<D> count=<N>'", 1)
    dim, count = int(m.group(1)), int(m.group(2))
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != count:
        raise ParseError(f"header says count={count} but found {len(body)} rows", 1)

    X = np.empty((count, dim))
    labels = np.empty(count, dtype=np.int64)
    for i, line in enumerate(body):
        lineno = i + 2
        label_text, sep, rest = line.partition(",")
        if not sep:
            raise ParseError("expected '<label>,<values>'", lineno)
        values = rest.split()
        if len(values) != dim:
            raise ParseError(f"expected {dim} values, got {len(values)}", lineno)
        try:
            labels[i] = int(label_text)
            X[i] = [float(v) for v in values]
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if labels[i] < 1:
            raise ParseError(f"label must be >= 1, got {labels[i]}", lineno)
    if not np.all(np.isfinite(X)):
        raise ParseError("non-finite value", 1 + 1 + int(np.argmax(~np.isfinite(X).all(axis=1))))
    return LabeledDataset(X, labels)


def write_splits(directory, ds):
    """Write ``train.txt``, ``val.txt`` and ``test.txt`` under ``directory``."""
    os.makedirs(directory, exist_ok=True)
    paths = {}
    for name in SPLITS:
        paths[name] = os.path.join(directory, f"{name}.txt")
        write_dataset(paths[name], ds.subset(name))
    return paths


def read_splits(directory):
    parts = [read_dataset(os.path.join(directory, f"{name}.txt")) for name in SPLITS]
    return LabeledDataset(
        np.vstack([p.X for p in parts]),
        np.concatenate([p.labels for p in parts]),
        np.concatenate([np.full(len(p), name, dtype=object) for name, p in zip(SPLITS, parts)]),
    )
