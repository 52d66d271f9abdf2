"""A small ReLU MLP embedding network, SGD with momentum, and the training loop.

The network maps inputs to raw embeddings ``f`` (hidden layers use ReLU, the
output layer is affine). A separate affine classifier head on ``f`` produces
logits for the softmax-based objectives.
"""

from dataclasses import asdict, dataclass, field
import glob
import logging
import os
import re

import numpy as np

from . import losses
from .centers import CenterBank, apply_center_update, init_centers
from .data import LabeledDataset, read_dataset, write_dataset
from .errors import BatchTooSmall, ConfigError
from .evaluation import evaluate

log = logging.getLogger(__name__)

LOSS_KINDS = (
    "atcl",
    "atcl+softmax",
    "cosine_tcl",
    "euclidean_tcl",
    "softmax",
    "center+softmax",
    "triplet",
)
UNIT_BANK_LOSSES = {"atcl", "atcl+softmax", "cosine_tcl"}
_FREE_BANK = {"euclidean_tcl", "center+softmax"}
_USES_HEAD = {"atcl+softmax", "softmax", "center+softmax"}


@dataclass(frozen=True)
class TrainConfig:
    loss_kind: str = "atcl"
    margin: float = 0.7
    lam: float = 1.0
    lr_net: float = 0.01
    lr_center: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 2e-4
    batch_size: int = 20
    epochs: int = 60
    lr_drop_epoch: int = 40
    lr_drop_factor: float = 0.1
    seed: int = 0
    hidden: tuple = (64,)
    embed_dim: int = 32
    init_std: float = 0.1
    eval_every: int = 10

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(f"loss_kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}")
        for name in ("lr_net", "lr_center", "momentum", "weight_decay", "init_std"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.epochs < 0 or self.lr_drop_epoch < 0 or self.eval_every < 1:
            raise ConfigError("epochs and lr_drop_epoch must be >= 0, eval_every >= 1")
        if not 0 < self.lr_drop_factor <= 1:
            raise ConfigError("lr_drop_factor must be in (0, 1]")
        if self.embed_dim < 2:
            raise ConfigError("embed_dim must be >= 2")
        losses.MarginConfig(self.margin, self.lam)
        if self.loss_kind in ("atcl", "atcl+softmax") and self.margin >= np.pi:
            raise ConfigError("angular margin must be < pi")

    @classmethod
    def long_schedule(cls, **overrides):
        """Small learning rates over a 120-epoch schedule with a drop at 80."""
        base = dict(loss_kind="atcl+softmax", margin=0.7, lam=1.0, lr_net=1e-4,
                    lr_center=1e-4, momentum=0.9, weight_decay=2e-4, batch_size=20,
                    epochs=120, lr_drop_epoch=80, lr_drop_factor=0.1, init_std=0.01)
        base.update(overrides)
        return cls(**base)

    @property
    def margin_config(self):
        return losses.MarginConfig(self.margin, self.lam)

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class EmbeddingModel:
    """Parameters ``W1, b1, ..., WL, bL`` for the embedding layers, ``Wc, bc`` for the head.

    Weight matrices are stored ``(out, in)``.
    """

    params: dict

    @property
    def n_layers(self):
        return sum(1 for k in self.params if re.fullmatch(r"W\d+", k))

    @property
    def has_head(self):
        return "Wc" in self.params

    @property
    def embed_dim(self):
        return self.params[f"W{self.n_layers}"].shape[0]

    def copy(self):
        return EmbeddingModel({k: v.copy() for k, v in self.params.items()})


def init_model(D, hidden, n, K=None, seed=0, std=0.01):
    """Gaussian(0, std) weights and biases; a head of ``K`` classes when ``K`` is given."""
    rng = np.random.default_rng(seed)
    sizes = [D, *hidden, n]
    params = {}
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        params[f"W{i}"] = rng.normal(0.0, std, size=(b, a))
        params[f"b{i}"] = rng.normal(0.0, std, size=b)
    if K is not None:
        params["Wc"] = rng.normal(0.0, std, size=(K, n))
        params["bc"] = rng.normal(0.0, std, size=K)
    return EmbeddingModel(params)


def _forward_cache(model, X):
    acts = [X]
    h = X
    L = model.n_layers
    for i in range(1, L + 1):
        z = h @ model.params[f"W{i}"].T + model.params[f"b{i}"]
        h = np.maximum(z, 0.0) if i < L else z
        acts.append(h)
    return acts


def forward(model, x):
    """Raw embedding(s) of ``x`` (a single input vector or a batch of rows)."""
    x = np.asarray(x, dtype=np.float64)
    out = _forward_cache(model, np.atleast_2d(x))[-1]
    return out[0] if x.ndim == 1 else out


def head_logits(model, F):
    return F @ model.params["Wc"].T + model.params["bc"]


def _backprop(model, acts, grad_f):
    grads = {}
    g = grad_f
    for i in range(model.n_layers, 0, -1):
        if i < model.n_layers:
            g = g * (acts[i] > 0)
        grads[f"W{i}"] = g.T @ acts[i - 1]
        grads[f"b{i}"] = g.sum(axis=0)
        g = g @ model.params[f"W{i}"]
    return grads


def objective(model, bank, X, labels, cfg):
    """Loss and parameter gradients for one batch under ``cfg.loss_kind``.

    Returns ``(LossOutput, grads)``; ``grads`` maps parameter names to arrays
    shaped like ``model.params``.
    """
    acts = _forward_cache(model, np.atleast_2d(X))
    F = acts[-1]
    mc = cfg.margin_config
    kind = cfg.loss_kind
    logits = head_logits(model, F) if kind in _USES_HEAD else None

    if kind == "atcl":
        out = losses.atcl(F, labels, bank, mc)
    elif kind == "atcl+softmax":
        out = losses.joint_loss(F, labels, bank, logits, mc)
    elif kind == "cosine_tcl":
        out = losses.cosine_tcl(F, labels, bank, mc)
    elif kind == "euclidean_tcl":
        out = losses.euclidean_tcl(F, labels, bank, mc)
    elif kind == "softmax":
        out = losses.softmax_xent(logits, labels)
        out.grad_features = np.zeros_like(F)
    elif kind == "center+softmax":
        soft = losses.softmax_xent(logits, labels)
        cen = losses.center_loss(F, labels, bank, mc)
        out = losses.LossOutput(
            loss=soft.loss + mc.lam * cen.loss,
            grad_features=mc.lam * cen.grad_features,
            center_delta=cen.center_delta,
            grad_logits=soft.grad_logits,
        )
    else:
        out = losses.triplet_loss(F, labels, mc)

    grad_f = out.grad_features
    grads = {}
    if logits is not None:
        grads["Wc"] = out.grad_logits.T @ F
        grads["bc"] = out.grad_logits.sum(axis=0)
        grad_f = grad_f + out.grad_logits @ model.params["Wc"]
    grads.update(_backprop(model, acts, grad_f))
    for k in model.params:
        grads.setdefault(k, np.zeros_like(model.params[k]))
    return out, grads


class SGD:
    """SGD with momentum and L2 weight decay.

    ``v <- momentum * v + (grad + weight_decay * p)``; ``p <- p - lr * v``.
    """

    def __init__(self, momentum=0.9, weight_decay=0.0):
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = {}

    def step(self, params, grads, lr):
        new = {}
        for k, p in params.items():
            g = grads[k] + self.weight_decay * p
            v = self.velocity.get(k)
            v = g if v is None else self.momentum * v + g
            self.velocity[k] = v
            new[k] = p - lr * v
        return new


def backward_step(model, bank, X, labels, cfg, optimizer, lr=None):
    """One optimizer step on the network and one center step on the bank.

    Returns ``(model, bank, loss)`` where ``loss`` is measured before the update.
    All per-batch quantities use the bank as it was before this step.
    """
    lr = cfg.lr_net if lr is None else lr
    out, grads = objective(model, bank, X, labels, cfg)
    model = EmbeddingModel(optimizer.step(model.params, grads, lr))
    if bank is not None and out.center_delta is not None:
        bank = apply_center_update(bank, out.center_delta, cfg.lr_center)
    return model, bank, out.loss


def make_bank(cfg, K):
    """Center bank suited to ``cfg.loss_kind`` (``None`` for losses without centers)."""
    if cfg.loss_kind in UNIT_BANK_LOSSES:
        return init_centers(K, cfg.embed_dim, seed=cfg.seed + 1, unit=True)
    if cfg.loss_kind in _FREE_BANK:
        return init_centers(K, cfg.embed_dim, seed=cfg.seed + 1, unit=False)
    return None


def make_model(cfg, D, K):
    head = K if cfg.loss_kind in _USES_HEAD else None
    return init_model(D, cfg.hidden, cfg.embed_dim, head, seed=cfg.seed, std=cfg.init_std)


@dataclass
class TrainResult:
    model: EmbeddingModel
    bank: CenterBank
    history: list = field(default_factory=list)


def lr_at(cfg, epoch):
    """Network learning rate for 1-based ``epoch``."""
    return cfg.lr_net * (cfg.lr_drop_factor if epoch > cfg.lr_drop_epoch else 1.0)


def train(model, bank, dataset, cfg, val=None):
    """Shuffled mini-batch training for ``cfg.epochs`` epochs.

    ``history`` has one dict per epoch with keys ``epoch``, ``loss`` (mean batch
    loss), ``lr`` and ``map`` (validation MAP every ``cfg.eval_every`` epochs,
    else ``None``).
    """
    rng = np.random.default_rng(cfg.seed)
    opt = SGD(cfg.momentum, cfg.weight_decay)
    N = len(dataset)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        lr = lr_at(cfg, epoch)
        order = rng.permutation(N)
        batch_losses = []
        for start in range(0, N, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            if idx.size < 2:
                continue
            try:
                model, bank, loss = backward_step(
                    model, bank, dataset.X[idx], dataset.labels[idx], cfg, opt, lr)
            except BatchTooSmall:
                continue
            batch_losses.append(loss)
        val_map = None
        if val is not None and len(val) > 1 and epoch % cfg.eval_every == 0:
            val_map = evaluate(forward(model, val.X), val.labels).map
        mean_loss = float(np.mean(batch_losses)) if batch_losses else float("nan")
        history.append({"epoch": epoch, "loss": mean_loss, "lr": lr, "map": val_map})
        log.info("epoch %d loss %.6g lr %g map %s", epoch, mean_loss, lr, val_map)
    return TrainResult(model, bank, history)


def fit(dataset, cfg):
    """Build model and bank from ``cfg`` and train on the ``train`` split (validating on ``val``)."""
    if dataset.split is not None:
        tr, va = dataset.subset("train"), dataset.subset("val")
    else:
        tr, va = dataset, None
    K = int(dataset.labels.max())
    model = make_model(cfg, tr.dim, K)
    bank = make_bank(cfg, K)
    return train(model, bank, tr, cfg, va)


def save_checkpoint(directory, model, bank=None):
    """Write each parameter (and the bank, as ``centers.txt``) in the dataset text format.

    Matrix rows become labeled vectors (label = row number); a bias is a single row.
    """
    os.makedirs(directory, exist_ok=True)
    for name, p in model.params.items():
        rows = np.atleast_2d(p)
        write_dataset(os.path.join(directory, f"{name}.txt"),
                      LabeledDataset(rows, np.arange(1, rows.shape[0] + 1)))
    if bank is not None:
        write_dataset(os.path.join(directory, "centers.txt"),
                      LabeledDataset(bank.centers, np.arange(1, bank.K + 1)))


def load_checkpoint(directory, unit_bank=True):
    params = {}
    for path in sorted(glob.glob(os.path.join(directory, "*.txt"))):
        name = os.path.splitext(os.path.basename(path))[0]
        if name == "centers":
            continue
        X = read_dataset(path).X
        params[name] = X[0] if name.startswith("b") else X
    centers = os.path.join(directory, "centers.txt")
    bank = CenterBank(read_dataset(centers).X, unit=unit_bank) if os.path.exists(centers) else None
    return EmbeddingModel(params), bank


def write_history(path, history):
    with open(path, "w") as fh:
        fh.write("epoch,loss,lr,map\n")
        for h in history:
            m = "" if h["map"] is None else repr(h["map"])
            fh.write(f"{h['epoch']},{h['loss']!r},{h['lr']!r},{m}\n")

