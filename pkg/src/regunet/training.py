"""Mini-batch training loop, evaluation, gradient checking and history export."""
import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonFiniteError, NumericalAbort, RegunetError
from .models import ModelSpec, build
from .objective import bce, bce_grad, bce_per_sample
from .optim import Adam
from .tensor import Rng
from .fileio import atomic_write_text

HISTORY_FIELDS = ("epoch", "train_loss", "train_penalty", "train_acc", "val_loss", "val_acc")


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    shuffle_seed: int = 0
    val_fraction: float = 0.1
    alpha: float = 0.01
    variant: str = "residual_concat"
    # write history every N epochs through the callback (0 disables)
    flush_every: int = 0

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ConfigError("epochs must be >= 1, got %r" % self.epochs)
        if int(self.batch_size) < 2:
            raise ConfigError("batch_size must be >= 2, got %r" % self.batch_size)
        if self.lr <= 0:
            raise ConfigError("lr must be positive")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_penalty: float
    train_acc: float
    val_loss: float | None
    val_acc: float | None
    wall_time: float = 0.0

    def as_row(self):
        return {k: getattr(self, k) for k in HISTORY_FIELDS}


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def last(self):
        return self.records[-1]


def make_batches(order, batch_size):
    """Split ``order`` into batches; a trailing batch of one row joins the previous one."""
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    if len(batches) > 1 and len(batches[-1]) < 2:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return batches


def evaluate(model, ds, indices, threshold=0.5):
    """Mean BCE and accuracy (percent) over ``indices``, in eval mode."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ConfigError("cannot evaluate on an empty index list")
    previous = model.mode
    model.eval()
    try:
        p = model.forward(ds.X[idx])
    finally:
        model.set_mode(previous)
    y = ds.y[idx]
    loss = float(np.sum(bce_per_sample(p, y)) / idx.size)
    acc = 100.0 * float(np.mean((p >= threshold) == (y == 1.0)))
    return loss, acc


def train(model, ds, split, cfg, callback=None):
    """Train ``model`` with Adam and return the per-epoch history.

    Train metrics are measured after each epoch by an eval-mode pass over the
    training rows; ``callback(history, record)`` runs after every epoch.
    """
    if ds.standardization is None:
        raise ConfigError("train expects a standardized dataset")
    if ds.dim != model.spec.input_dim:
        raise ConfigError("model expects %d features, dataset has %d" % (model.spec.input_dim, ds.dim))
    train_idx = np.asarray(split.train_idx, dtype=np.int64)
    if train_idx.size < 2:
        raise ConfigError("need at least 2 training rows")
    adam = Adam(model.parameters(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.adam_eps,
                names=model.parameter_names())
    rng = Rng(cfg.shuffle_seed, stream=31)
    history = TrainHistory()
    for epoch in range(1, cfg.epochs + 1):
        start = time.perf_counter()
        model.train()
        order = train_idx[rng.permutation(train_idx.size)]
        for b, batch in enumerate(make_batches(order, cfg.batch_size)):
            try:
                p = model.forward(ds.X[batch])
                loss = bce(p, ds.y[batch])
                if not math.isfinite(loss):
                    raise NonFiniteError("loss is %r" % loss)
                model.backward(bce_grad(p, ds.y[batch]))
                adam.step(model.parameters(), model.gradients())
            except NonFiniteError as exc:
                raise NumericalAbort("epoch %d, batch %d: %s" % (epoch, b + 1, exc), epoch, b + 1) from exc
        train_loss, train_acc = evaluate(model, ds, train_idx)
        if len(split.val_idx):
            val_loss, val_acc = evaluate(model, ds, split.val_idx)
        else:
            val_loss = val_acc = None
        record = EpochRecord(epoch, train_loss, model.penalty(), train_acc, val_loss, val_acc,
                             wall_time=time.perf_counter() - start)
        history.records.append(record)
        if callback is not None:
            callback(history, record)
    model.eval()
    return history


# -- gradient checking -----------------------------------------------------

TINY_LIMITS = {"input_dim": 5, "hidden_width": 8, "head_width": 8}
GRADCHECK_P_MARGIN = 1e-2


@dataclass
class GradCheckResult:
    variant: str
    max_rel_error: float
    worst_param: str
    worst_index: tuple
    checked: int
    skipped: int
    rows: int = 0

    @property
    def passed(self):
        return self.max_rel_error < 1e-4


def tiny_spec(variant, seed=0, alpha=0.1):
    return ModelSpec(variant, input_dim=3, hidden_width=4, head_width=4, alpha=alpha, seed=seed)


def relative_error(analytic, numeric, floor=1e-5):
    # Central differences at h=1e-5 resolve gradients to about 1e-10 (forward
    # roundoff, amplified by batch norm over tiny batches), so gradients below
    # the floor are compared at an absolute 1e-9.
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def gradient_check(spec, seed=0, batch=6, h=1e-5):
    """Compare analytic gradients of the total regularized loss with finite differences.

    The numeric side is the five-point central stencil with step ``h``, whose
    O(h^4) truncation error stays negligible even where batch norm sees a
    near-constant column. Batch rows whose prediction is within 1e-2 of 0 or 1
    are dropped before comparing: past the clip the loss is flat, and near it
    ``1 - p`` keeps too few digits for a difference quotient. Entries are
    skipped when any perturbation moves a ReLU input across zero, and, for
    L1-penalized weights, when ``|W| < 1e-3``.
    """
    for name, limit in TINY_LIMITS.items():
        if getattr(spec, name) > limit:
            raise ConfigError("gradient_check needs %s <= %d" % (name, limit))
    if not 2 <= batch <= 8:
        raise ConfigError("gradient_check needs 2 <= batch <= 8")
    model = build(spec).train()
    rng = Rng(seed, stream=41)
    X = rng.normal(batch * spec.input_dim).reshape(batch, spec.input_dim)
    y = (np.arange(batch) % 2).astype(np.float64)[rng.permutation(batch)].reshape(-1, 1)
    relus = [layer for layer in model.layers() if layer.kind == "relu"]
    bn_state = [(bn.running_mean.copy(), bn.running_var.copy()) for bn in model.batchnorm_layers()]

    # dropping rows moves batch statistics, so repeat until every row is clean
    for _ in range(batch):
        p = model.forward(X).ravel()
        distance = np.minimum(p, 1.0 - p)
        clean = distance >= GRADCHECK_P_MARGIN
        if clean.all() or X.shape[0] == 2:
            break
        if clean.sum() < 2:
            clean = distance >= np.sort(distance)[-2]
        X, y = X[clean], y[clean]

    def evaluate_loss():
        p = model.forward(X)
        pattern = tuple(bytes(np.packbits(r.cache > 0)) for r in relus)
        return p, bce(p, y) + model.penalty(), pattern

    p, _, base_pattern = evaluate_loss()
    model.backward(bce_grad(p, y))
    analytic = [g.copy() for g in model.gradients()]

    worst = (0.0, "", ())
    checked = skipped = 0
    regs = [reg for _, reg in model.dense_layers() for _ in (0, 1)]
    for pname, param, grad, reg in zip(model.parameter_names(), model.parameters(), analytic, regs):
        is_weight = pname.endswith(".W")
        for idx in np.ndindex(param.shape):
            orig = param[idx]
            if is_weight and reg.mode == "l1" and abs(orig) < 1e-3:
                skipped += 1
                continue
            losses, kinked = {}, False
            for k in (2, 1, -1, -2):
                param[idx] = orig + k * h
                _, losses[k], pattern = evaluate_loss()
                kinked = kinked or pattern != base_pattern
            param[idx] = orig
            if kinked:
                skipped += 1
                continue
            numeric = (8.0 * (losses[1] - losses[-1]) - (losses[2] - losses[-2])) / (12.0 * h)
            err = relative_error(grad[idx], numeric)
            checked += 1
            if err > worst[0]:
                worst = (err, pname, idx)
    for bn, (mean, var) in zip(model.batchnorm_layers(), bn_state):
        bn.running_mean, bn.running_var = mean, var
    return GradCheckResult(spec.variant, worst[0], worst[1], worst[2], checked, skipped, X.shape[0])


# -- history export --------------------------------------------------------

def _fmt(value):
    return "" if value is None else repr(value)


def export_history(history, path, fmt="csv"):
    """Write the history as CSV (fixed column order) or a JSON array."""
    if not len(history):
        raise ConfigError("history is empty")
    rows = [r.as_row() for r in history.records]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(HISTORY_FIELDS)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in HISTORY_FIELDS])
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps(rows, indent=1) + "\n"
    else:
        raise ConfigError("history format must be 'csv' or 'json', got %r" % fmt)
    try:
        atomic_write_text(path, text)
    except OSError as exc:
        raise RegunetError("cannot write history to %s: %s" % (path, exc)) from exc


def load_history(path):
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    return TrainHistory([EpochRecord(**row) for row in rows])
