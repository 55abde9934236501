"""The four classifier variants and their forward/backward orchestration.

Every variant shares the same branch body: four dense layers
(input -> width, then width -> width three times), each followed by ReLU.

``l1_reg`` / ``l2_reg``
    one branch with batch normalization after each hidden activation and a
    dense sigmoid output unit; every dense weight matrix is penalized.
``concat``
    two independently seeded branches (L1-penalized and L2-penalized), both
    with batch normalization, joined column-wise and fed through a
    ``head_width`` ReLU layer into the sigmoid output.
``residual_concat``
    as ``concat`` but without batch normalization; inside each branch the
    post-ReLU output of dense layer ``skip_from`` is added to the
    pre-activation of dense layer ``skip_to`` before its ReLU.

The head of the two-branch variants is not penalized.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .layers import BatchNorm, Concat, Dense, ReLU, ResidualAdd, Sigmoid
from .objective import RegularizationConfig, add_penalty_grad, penalty_term
from .tensor import Rng, shape_str

VARIANTS = ("l1_reg", "l2_reg", "concat", "residual_concat")
BRANCH_DEPTH = 4


@dataclass(frozen=True)
class ModelSpec:
    variant: str
    input_dim: int = 41
    hidden_width: int = 512
    head_width: int = 128
    alpha: float = 0.01
    seed: int = 0
    # None picks the variant default: on for l1_reg/l2_reg/concat, off for residual_concat
    batchnorm: bool | None = None
    bn_placement: str = "post"
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5
    skip_from: int = 1
    skip_to: int = 4
    branch_modes: tuple = ("l1", "l2")
    branch_seeds: tuple | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError("unknown variant %r; choose from %s" % (self.variant, ", ".join(VARIANTS)))
        for name in ("input_dim", "hidden_width", "head_width"):
            if int(getattr(self, name)) < 1:
                raise ConfigError("%s must be positive, got %r" % (name, getattr(self, name)))
        if self.bn_placement not in ("post", "pre"):
            raise ConfigError("bn_placement must be 'post' or 'pre'")
        if not 1 <= self.skip_from < self.skip_to <= BRANCH_DEPTH:
            raise ConfigError("need 1 <= skip_from < skip_to <= %d" % BRANCH_DEPTH)
        object.__setattr__(self, "branch_modes", tuple(self.branch_modes))
        if self.branch_seeds is not None:
            object.__setattr__(self, "branch_seeds", tuple(int(s) for s in self.branch_seeds))
        RegularizationConfig("l2", self.alpha)  # validates alpha

    @property
    def two_branch(self):
        return self.variant in ("concat", "residual_concat")

    @property
    def uses_batchnorm(self):
        if self.batchnorm is None:
            return self.variant != "residual_concat"
        return bool(self.batchnorm)

    def to_dict(self):
        d = asdict(self)
        d["branch_modes"] = list(self.branch_modes)
        d["branch_seeds"] = None if self.branch_seeds is None else list(self.branch_seeds)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["branch_modes"] = tuple(d.get("branch_modes", ("l1", "l2")))
        if d.get("branch_seeds") is not None:
            d["branch_seeds"] = tuple(d["branch_seeds"])
        return cls(**d)


class Branch:
    """Four dense+ReLU blocks with optional batch norm and one skip."""

    def __init__(self, name, spec, rng, reg, residual):
        self.name = name
        self.reg = reg
        self.batchnorm = spec.uses_batchnorm
        self.bn_placement = spec.bn_placement
        self.skip_from = spec.skip_from
        self.skip_to = spec.skip_to
        width = spec.hidden_width
        self.dense = []
        self.relu = []
        self.bn = []
        for i in range(BRANCH_DEPTH):
            fan_in = spec.input_dim if i == 0 else width
            self.dense.append(Dense(fan_in, width, rng, "he_normal", name="%s.dense%d" % (name, i + 1)))
            self.relu.append(ReLU("%s.relu%d" % (name, i + 1)))
            if self.batchnorm:
                self.bn.append(BatchNorm(width, spec.bn_momentum, spec.bn_eps, name="%s.bn%d" % (name, i + 1)))
        self.skip = ResidualAdd("%s.skip" % name) if residual else None
        # ablation switch: False bypasses the skip while keeping the weights
        self.skip_enabled = True

    def layers(self):
        out = []
        for i in range(BRANCH_DEPTH):
            out.append(self.dense[i])
            if self.batchnorm and self.bn_placement == "pre":
                out.append(self.bn[i])
            if self.skip is not None and i == self.skip_to - 1:
                out.append(self.skip)
            out.append(self.relu[i])
            if self.batchnorm and self.bn_placement == "post":
                out.append(self.bn[i])
        return out

    def _skip_active(self, i):
        return self.skip is not None and self.skip_enabled and i == self.skip_to - 1

    def forward(self, x):
        outs = []
        h = x
        for i in range(BRANCH_DEPTH):
            z = self.dense[i].forward(h)
            if self.batchnorm and self.bn_placement == "pre":
                z = self.bn[i].forward(z)
            if self._skip_active(i):
                z = self.skip.forward(z, outs[self.skip_from - 1])
            h = self.relu[i].forward(z)
            if self.batchnorm and self.bn_placement == "post":
                h = self.bn[i].forward(h)
            outs.append(h)
        return h

    def backward(self, grad):
        pending = [None] * BRANCH_DEPTH
        for i in reversed(range(BRANCH_DEPTH)):
            if pending[i] is not None:
                grad = grad + pending[i]
            if self.batchnorm and self.bn_placement == "post":
                grad = self.bn[i].backward(grad)
            grad = self.relu[i].backward(grad)
            if self._skip_active(i):
                grad, skip_grad = self.skip.backward(grad)
                pending[self.skip_from - 1] = skip_grad
            if self.batchnorm and self.bn_placement == "pre":
                grad = self.bn[i].backward(grad)
            grad = self.dense[i].backward(grad)
        return grad


class Model:
    def __init__(self, spec, initialize=True):
        self.spec = spec
        # initialize=False leaves all weights at zero (a checkpoint fills them in)
        make_rng = Rng if initialize else (lambda *args, **kwargs: None)
        residual = spec.variant == "residual_concat"
        if spec.two_branch:
            seeds = spec.branch_seeds or (spec.seed, spec.seed + 1)
            if len(seeds) != 2 or len(spec.branch_modes) != 2:
                raise ConfigError("two-branch variants need two branch seeds and two branch modes")
            self.branches = [
                Branch("branch%d" % (k + 1), spec, make_rng(seeds[k]),
                       RegularizationConfig(spec.branch_modes[k], spec.alpha), residual)
                for k in range(2)
            ]
            self.head_reg = RegularizationConfig("none", spec.alpha)
            head_rng = make_rng(spec.seed, stream=1)
            self.concat = Concat("concat")
            self.head = [
                Dense(2 * spec.hidden_width, spec.head_width, head_rng, "he_normal", name="head.dense1"),
                ReLU("head.relu1"),
                Dense(spec.head_width, 1, head_rng, "xavier_uniform", name="head.out"),
                Sigmoid("head.sigmoid"),
            ]
        else:
            seed = spec.branch_seeds[0] if spec.branch_seeds else spec.seed
            mode = "l1" if spec.variant == "l1_reg" else "l2"
            reg = RegularizationConfig(mode, spec.alpha)
            self.branches = [Branch("branch1", spec, make_rng(seed), reg, residual=False)]
            self.head_reg = reg
            self.concat = None
            self.head = [
                Dense(spec.hidden_width, 1, make_rng(spec.seed, stream=1), "xavier_uniform", name="head.out"),
                Sigmoid("head.sigmoid"),
            ]
        self.mode = "train"
        # carried through checkpoints; set by the training pipeline
        self.standardization = None
        self.provenance = None

    def __repr__(self):
        return "Model(variant=%r, params=%d, mode=%r)" % (self.spec.variant, self.param_count(), self.mode)

    # -- structure -------------------------------------------------------

    def layers(self):
        out = []
        for br in self.branches:
            out.extend(br.layers())
        if self.concat is not None:
            out.append(self.concat)
        out.extend(self.head)
        return out

    def dense_layers(self):
        """``(Dense, RegularizationConfig)`` pairs in a fixed order."""
        pairs = [(d, br.reg) for br in self.branches for d in br.dense]
        pairs.extend((layer, self.head_reg) for layer in self.head if isinstance(layer, Dense))
        return pairs

    def batchnorm_layers(self):
        return [bn for br in self.branches for bn in br.bn]

    def parameters(self):
        return [p for d, _ in self.dense_layers() for p in (d.W, d.b)]

    def gradients(self):
        return [g for d, _ in self.dense_layers() for g in (d.grad_W, d.grad_b)]

    def parameter_names(self):
        return [n for d, _ in self.dense_layers() for n in (d.name + ".W", d.name + ".b")]

    def param_count(self):
        return sum(layer.parameter_count() for layer in self.layers())

    def branch_param_count(self):
        return sum(layer.parameter_count() for layer in self.branches[0].layers())

    def layer_table(self):
        """Rows of ``(name, kind, shape, parameter_count)``."""
        rows = []
        for layer in self.layers():
            shape = "%dx%d" % layer.W.shape if isinstance(layer, Dense) else "-"
            rows.append((layer.name, layer.kind, shape, layer.parameter_count()))
        return rows

    # -- modes -----------------------------------------------------------

    def set_mode(self, mode):
        if mode not in ("train", "eval"):
            raise ConfigError("mode must be 'train' or 'eval'")
        self.mode = mode
        for bn in self.batchnorm_layers():
            bn.mode = mode
        return self

    def train(self):
        return self.set_mode("train")

    def eval(self):
        return self.set_mode("eval")

    # -- computation -----------------------------------------------------

    def forward(self, X):
        if X.ndim != 2 or X.shape[1] != self.spec.input_dim:
            raise ShapeError("model expects %d input columns, got %s" % (self.spec.input_dim, shape_str(X)))
        outs = [br.forward(X) for br in self.branches]
        h = self.concat.forward(*outs) if self.concat is not None else outs[0]
        for layer in self.head:
            h = layer.forward(h)
        return h

    def backward(self, grad_probs):
        """Populate every dense gradient, penalty gradients included."""
        g = grad_probs
        for layer in reversed(self.head):
            g = layer.backward(g)
        parts = self.concat.backward(g) if self.concat is not None else (g,)
        for br, part in zip(self.branches, parts):
            br.backward(part)
        for d, reg in self.dense_layers():
            add_penalty_grad(d.grad_W, d.W, reg)

    def penalty(self):
        """Scaled penalty term summed over every penalized weight matrix."""
        total = 0.0
        for br in self.branches:
            total += penalty_term([d.W for d in br.dense], br.reg)
        head = [layer.W for layer in self.head if isinstance(layer, Dense)]
        total += penalty_term(head, self.head_reg)
        return total

    def zero_grad(self):
        for d, _ in self.dense_layers():
            d.zero_grad()


def build(spec, initialize=True):
    return Model(spec, initialize)


def param_count(model):
    return model.param_count()


def forward(model, X):
    return model.forward(X)


def backward(model, grad_probs):
    model.backward(grad_probs)


def classify(model, X, threshold=0.5):
    """Labels in {0, 1}: 1 where the predicted probability >= ``threshold``."""
    if not 0.0 < threshold < 1.0:
        raise ConfigError("threshold must lie in (0, 1), got %r" % threshold)
    return (model.forward(X) >= threshold).astype(np.float64)
