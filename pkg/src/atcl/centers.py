"""Per-class center bank: initialization, hard-negative lookup and the averaged update.

Class labels are 1-based (``1..K``) everywhere in the public API; row ``j - 1``
of :attr:`CenterBank.centers` holds the center of class ``j``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidShape
from .geometry import l2_normalize

#: Floor applied to sin(alpha) and sin(beta) before dividing by them.
SIN_FLOOR = 1e-7


@dataclass(frozen=True)
class CenterBank:
    """K class centers of dimension n.

    ``unit`` banks (the angular and cosine losses) keep every center at norm 1.
    The Euclidean baselines use a free, unnormalized bank (``unit=False``).
    """

    centers: np.ndarray
    unit: bool = True

    def __post_init__(self):
        c = np.array(self.centers, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 2 or c.shape[1] < 2:
            raise InvalidShape(f"center bank must be (K>=2, n>=2), got {c.shape}")
        if self.unit:
            c = l2_normalize(c)
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def K(self):
        return self.centers.shape[0]

    @property
    def n(self):
        return self.centers.shape[1]

    def center(self, label):
        return self.centers[label - 1]


def init_centers(K, n, seed, std=0.01, unit=True):
    """Draw every entry from N(0, std^2), then normalize each center if ``unit``."""
    if K < 2 or n < 2:
        raise InvalidShape(f"need K >= 2 and n >= 2, got K={K}, n={n}")
    rng = np.random.default_rng(seed)
    return CenterBank(rng.normal(0.0, std, size=(K, n)), unit=unit)


def center_angles(bank, f_norm):
    """Angles between unit features ``(M, n)`` and every unit center, shape ``(M, K)``."""
    cos = np.clip(np.atleast_2d(f_norm) @ bank.centers.T, -1.0, 1.0)
    return np.arccos(cos)


def _masked_argmin(dist, labels):
    """Row-wise argmin over classes other than the row's own label (smallest index on ties)."""
    dist = np.array(dist, dtype=np.float64)
    rows = np.arange(dist.shape[0])
    dist[rows, labels - 1] = np.inf
    hard = np.argmin(dist, axis=1)
    return hard + 1, dist[rows, hard]


def hard_negatives(bank, f_norm, labels):
    """Vectorized :func:`nearest_negative`: returns ``(hard, beta)`` arrays."""
    labels = np.asarray(labels)
    return _masked_argmin(center_angles(bank, f_norm), labels)


def nearest_negative(bank, f_norm, label):
    """Closest center (by angle) among classes other than ``label``.

    Returns ``(index, angle)`` with a 1-based class index.
    """
    hard, beta = hard_negatives(bank, np.atleast_2d(f_norm), np.array([label]))
    return int(hard[0]), float(beta[0])


def averaged_delta(K, labels, hard, neg_terms, pos_terms, active):
    """Class-averaged center step shared by all center-based losses.

    For each class ``j``::

        delta_j = sum(neg_terms[i] : active, hard_i == j) / (1 + #{active, hard_i == j})
                - sum(pos_terms[i] : active, y_i == j)    / (1 + #{active, y_i == j})
    """
    labels = np.asarray(labels)
    hard = np.asarray(hard)
    active = np.asarray(active, dtype=bool)
    n = np.shape(pos_terms)[-1]
    neg_sum = np.zeros((K, n))
    pos_sum = np.zeros((K, n))
    neg_count = np.zeros(K)
    pos_count = np.zeros(K)
    np.add.at(neg_sum, hard[active] - 1, np.asarray(neg_terms)[active])
    np.add.at(pos_sum, labels[active] - 1, np.asarray(pos_terms)[active])
    np.add.at(neg_count, hard[active] - 1, 1.0)
    np.add.at(pos_count, labels[active] - 1, 1.0)
    return neg_sum / (1.0 + neg_count)[:, None] - pos_sum / (1.0 + pos_count)[:, None]


def accumulate_center_delta(bank, f_norm, labels, hard, alpha, beta, active):
    """Averaged center step for the angular loss.

    ``f_norm`` are the unit features of the batch; ``alpha``/``beta`` the angles
    to the own and hard-negative centers; ``active`` marks samples with
    positive loss. Inactive samples contribute nothing.
    """
    f_norm = np.atleast_2d(f_norm)
    sin_a = np.maximum(np.sin(np.asarray(alpha, dtype=np.float64)), SIN_FLOOR)
    sin_b = np.maximum(np.sin(np.asarray(beta, dtype=np.float64)), SIN_FLOOR)
    g1 = f_norm / sin_b[:, None]
    g2 = f_norm / sin_a[:, None]
    return averaged_delta(bank.K, labels, hard, g1, g2, active)


def apply_center_update(bank, delta, lr_center):
    """``c_j <- c_j - lr_center * delta_j``, renormalized for unit banks."""
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != bank.centers.shape:
        raise DimensionMismatch(f"delta shape {delta.shape} != bank shape {bank.centers.shape}")
    if lr_center == 0:
        return bank
    return CenterBank(bank.centers - lr_center * delta, unit=bank.unit)
