"""Loss values and analytic gradients.

All metric losses take a batch of raw features ``F`` (shape ``(M, n)``) with
1-based labels and return a :class:`LossOutput`. The gradients in
``grad_features`` are w.r.t. the raw features; losses that work on the unit
sphere chain through the normalization Jacobian.
"""

from dataclasses import dataclass

import numpy as np

from .centers import SIN_FLOOR, _masked_argmin, accumulate_center_delta, averaged_delta
from .errors import BatchTooSmall, ConfigError, DimensionMismatch
from .geometry import l2_normalize, normalization_vjp


@dataclass(frozen=True)
class MarginConfig:
    """Margin ``m`` (units depend on the loss) and softmax trade-off weight ``lam``."""

    m: float = 0.7
    lam: float = 1.0

    def __post_init__(self):
        if not self.m >= 0:
            raise ConfigError(f"margin must be >= 0, got {self.m}")
        if not self.lam >= 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")


@dataclass
class LossOutput:
    loss: float
    grad_features: np.ndarray
    center_delta: np.ndarray = None
    per_sample: np.ndarray = None
    alpha: np.ndarray = None
    beta: np.ndarray = None
    hard: np.ndarray = None
    active: np.ndarray = None
    grad_logits: np.ndarray = None


def _check_batch(F, labels, bank=None):
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if F.shape[0] != labels.shape[0]:
        raise DimensionMismatch(f"{F.shape[0]} features but {labels.shape[0]} labels")
    if bank is not None:
        if F.shape[1] != bank.n:
            raise DimensionMismatch(f"feature dim {F.shape[1]} != center dim {bank.n}")
        if labels.size and (labels.min() < 1 or labels.max() > bank.K):
            raise ValueError(f"labels must lie in 1..{bank.K}")
    return F, labels


def atcl(F, labels, bank, cfg):
    """Angular triplet-center loss, summed over the batch.

    Per sample: ``max(alpha + m - beta, 0)`` where ``alpha`` is the angle to the
    own center and ``beta`` the angle to the nearest other center.
    """
    F, labels = _check_batch(F, labels, bank)
    rows = np.arange(F.shape[0])
    U = l2_normalize(F)
    C = bank.centers
    angles = np.arccos(np.clip(U @ C.T, -1.0, 1.0))
    alpha = angles[rows, labels - 1]
    hard, beta = _masked_argmin(angles, labels)

    margin = alpha + cfg.m - beta
    active = margin > 0
    per_sample = np.where(active, margin, 0.0)

    sin_a = np.maximum(np.sin(alpha), SIN_FLOOR)
    sin_b = np.maximum(np.sin(beta), SIN_FLOOR)
    grad_unit = C[hard - 1] / sin_b[:, None] - C[labels - 1] / sin_a[:, None]
    grad_unit[~active] = 0.0

    return LossOutput(
        loss=float(np.sum(per_sample)),
        grad_features=normalization_vjp(F, grad_unit),
        center_delta=accumulate_center_delta(bank, U, labels, hard, alpha, beta, active),
        per_sample=per_sample,
        alpha=alpha,
        beta=beta,
        hard=hard,
        active=active,
    )


def cosine_tcl(F, labels, bank, cfg):
    """Triplet-center loss with cosine distance: ``max(cos(beta) + m - cos(alpha), 0)``."""
    F, labels = _check_batch(F, labels, bank)
    rows = np.arange(F.shape[0])
    U = l2_normalize(F)
    C = bank.centers
    cos = np.clip(U @ C.T, -1.0, 1.0)
    cos_pos = cos[rows, labels - 1]
    hard, cosd_hard = _masked_argmin(1.0 - cos, labels)
    cos_hard = 1.0 - cosd_hard

    margin = cos_hard + cfg.m - cos_pos
    active = margin > 0
    per_sample = np.where(active, margin, 0.0)

    grad_unit = C[hard - 1] - C[labels - 1]
    grad_unit[~active] = 0.0

    return LossOutput(
        loss=float(np.sum(per_sample)),
        grad_features=normalization_vjp(F, grad_unit),
        center_delta=averaged_delta(bank.K, labels, hard, U, U, active),
        per_sample=per_sample,
        alpha=np.arccos(cos_pos),
        beta=np.arccos(cos_hard),
        hard=hard,
        active=active,
    )


def euclidean_tcl(F, labels, bank, cfg):
    """Triplet-center loss on half squared Euclidean distance, unnormalized centers."""
    F, labels = _check_batch(F, labels, bank)
    rows = np.arange(F.shape[0])
    C = bank.centers
    diff = F[:, None, :] - C[None, :, :]
    D = 0.5 * np.sum(diff * diff, axis=-1)
    d_pos = D[rows, labels - 1]
    hard, d_hard = _masked_argmin(D, labels)

    margin = d_pos + cfg.m - d_hard
    active = margin > 0
    per_sample = np.where(active, margin, 0.0)

    grad = C[hard - 1] - C[labels - 1]
    grad[~active] = 0.0
    delta = averaged_delta(bank.K, labels, hard, F - C[hard - 1], F - C[labels - 1], active)

    return LossOutput(
        loss=float(np.sum(per_sample)),
        grad_features=grad,
        center_delta=delta,
        per_sample=per_sample,
        hard=hard,
        active=active,
    )


def center_loss(F, labels, bank, cfg=None):
    """``sum_i 0.5 * ||f_i - c_{y_i}||^2`` with the class-averaged center step."""
    F, labels = _check_batch(F, labels, bank)
    diff = F - bank.centers[labels - 1]
    per_sample = 0.5 * np.sum(diff * diff, axis=1)
    active = np.ones(F.shape[0], dtype=bool)
    delta = averaged_delta(bank.K, labels, labels, np.zeros_like(diff), diff, active)
    return LossOutput(
        loss=float(np.sum(per_sample)),
        grad_features=diff,
        center_delta=delta,
        per_sample=per_sample,
        active=active,
    )


def softmax_xent(logits, labels):
    """Mean cross-entropy over the batch; ``grad_logits`` is the gradient of that mean."""
    Z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if Z.shape[0] != labels.shape[0]:
        raise DimensionMismatch(f"{Z.shape[0]} logit rows but {labels.shape[0]} labels")
    M = Z.shape[0]
    rows = np.arange(M)
    shifted = Z - Z.max(axis=1, keepdims=True)
    log_norm = np.log(np.sum(np.exp(shifted), axis=1))
    log_p = shifted - log_norm[:, None]
    per_sample = -log_p[rows, labels - 1]
    grad = np.exp(log_p)
    grad[rows, labels - 1] -= 1.0
    return LossOutput(
        loss=float(np.mean(per_sample)),
        grad_features=None,
        per_sample=per_sample,
        grad_logits=grad / M,
    )


def triplet_loss(F, labels, cfg):
    """Batch-all triplet loss on squared Euclidean distance.

    Averages ``max(||a - p||^2 - ||a - n||^2 + m, 0)`` over every in-batch
    triplet with ``y_a == y_p``, ``a != p`` and ``y_n != y_a``.
    """
    F, labels = _check_batch(F, labels)
    M = F.shape[0]
    sq = np.sum(F * F, axis=1)
    D = np.maximum(sq[:, None] + sq[None, :] - 2.0 * F @ F.T, 0.0)
    same = labels[:, None] == labels[None, :]
    pos_pair = same & ~np.eye(M, dtype=bool)
    valid = pos_pair[:, :, None] & ~same[:, None, :]
    if not valid.any():
        raise BatchTooSmall("batch has no (anchor, positive, negative) triplet")

    margin = D[:, :, None] - D[:, None, :] + cfg.m
    active = valid & (margin > 0)
    n_valid = valid.sum()
    loss = float(np.sum(np.where(active, margin, 0.0)) / n_valid)

    W = active / n_valid
    A = W.sum(axis=2)  # weight on d(a, p)
    B = W.sum(axis=1)  # weight on d(a, n)

    def laplacian(X):
        S = X + X.T
        return np.diag(S.sum(axis=1)) - S

    grad = 2.0 * (laplacian(A) - laplacian(B)) @ F
    return LossOutput(loss=loss, grad_features=grad, active=active.any(axis=(1, 2)))


def joint_loss(F, labels, bank, logits, cfg):
    """``softmax_xent(logits) + lam * atcl(F)``.

    ``logits`` come from a classifier head on the raw embedding; the caller
    backpropagates ``grad_logits`` through that head. The center step is the
    unscaled angular one.
    """
    soft = softmax_xent(logits, labels)
    ang = atcl(F, labels, bank, cfg)
    return LossOutput(
        loss=soft.loss + cfg.lam * ang.loss,
        grad_features=cfg.lam * ang.grad_features,
        center_delta=ang.center_delta,
        per_sample=ang.per_sample,
        alpha=ang.alpha,
        beta=ang.beta,
        hard=ang.hard,
        active=ang.active,
        grad_logits=soft.grad_logits,
    )
