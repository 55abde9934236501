"""JSON checkpoints (format ``regunet-ckpt-1``).

Layout, in this key order::

    {"version": "regunet-ckpt-1",
     "spec": {...ModelSpec fields...},
     "layers": [{"name", "kind", "shape", "W", "b"}            # dense
                {"name", "kind", "shape", "momentum", "eps",
                 "running_mean", "running_var"}],              # batchnorm
     "standardization": {"mean": [...], "std": [...]} | null,
     "rng_seed": int,
     "provenance": {...} | null}

Arrays are flat row-major lists of decimal floats in shortest round-trip
form, so a save/load round trip is exact.
"""
import orjson
import numpy as np

from .data import Standardization
from .errors import CheckpointError, RegunetError
from .fileio import atomic_write_bytes
from .layers import BatchNorm, Dense
from .models import ModelSpec, build

VERSION = "regunet-ckpt-1"


def _stateful_layers(model):
    return [layer for layer in model.layers() if isinstance(layer, (Dense, BatchNorm))]


def to_document(model):
    standardization = model.standardization
    layers = []
    for layer in _stateful_layers(model):
        if isinstance(layer, Dense):
            layers.append({
                "name": layer.name,
                "kind": "dense",
                "shape": list(layer.W.shape),
                "W": layer.W.ravel().tolist(),
                "b": layer.b.ravel().tolist(),
            })
        else:
            layers.append({
                "name": layer.name,
                "kind": "batchnorm",
                "shape": [layer.features],
                "momentum": layer.momentum,
                "eps": layer.eps,
                "running_mean": layer.running_mean.ravel().tolist(),
                "running_var": layer.running_var.ravel().tolist(),
            })
    return {
        "version": VERSION,
        "spec": model.spec.to_dict(),
        "layers": layers,
        "standardization": None if standardization is None else standardization.to_dict(),
        "rng_seed": model.spec.seed,
        "provenance": model.provenance,
    }


def save_checkpoint(model, path):
    """Write ``model`` (with its ``standardization`` and ``provenance``) to ``path``."""
    try:
        payload = orjson.dumps(to_document(model))
    except orjson.JSONEncodeError as exc:
        raise CheckpointError("cannot serialize checkpoint: %s" % exc) from exc
    try:
        atomic_write_bytes(path, payload)
    except OSError as exc:
        raise RegunetError("cannot write checkpoint %s: %s" % (path, exc)) from exc


def _array(values, size, where):
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 1 or a.size != size:
        raise CheckpointError("%s: expected %d values, found %d" % (where, size, a.size))
    if not np.isfinite(a).all():
        raise CheckpointError("%s: non-finite values" % where)
    return a


def from_document(doc):
    """Rebuild the model described by a parsed checkpoint document."""
    if not isinstance(doc, dict) or doc.get("version") != VERSION:
        found = doc.get("version") if isinstance(doc, dict) else None
        raise CheckpointError("unsupported checkpoint version %r (expected %r)" % (found, VERSION))
    try:
        spec = ModelSpec.from_dict(doc["spec"])
        entries = doc["layers"]
    except (KeyError, TypeError) as exc:
        raise CheckpointError("malformed checkpoint: %s" % exc) from exc
    except RegunetError as exc:
        raise CheckpointError("invalid spec in checkpoint: %s" % exc) from exc
    model = build(spec, initialize=False)
    targets = _stateful_layers(model)
    if len(entries) != len(targets):
        raise CheckpointError("checkpoint has %d layers, spec builds %d" % (len(entries), len(targets)))
    for entry, layer in zip(entries, targets):
        kind = "dense" if isinstance(layer, Dense) else "batchnorm"
        if entry.get("name") != layer.name or entry.get("kind") != kind:
            raise CheckpointError("layer mismatch: checkpoint %r/%r vs model %r/%r"
                                  % (entry.get("name"), entry.get("kind"), layer.name, kind))
        where = "layer %s" % layer.name
        if kind == "dense":
            if list(entry.get("shape", [])) != list(layer.W.shape):
                raise CheckpointError("%s: shape %s inconsistent with model %s"
                                      % (where, entry.get("shape"), list(layer.W.shape)))
            layer.W = _array(entry["W"], layer.W.size, where + " W").reshape(layer.W.shape)
            layer.b = _array(entry["b"], layer.b.size, where + " b").reshape(layer.b.shape)
            layer.zero_grad()
        else:
            if list(entry.get("shape", [])) != [layer.features]:
                raise CheckpointError("%s: shape %s inconsistent with model [%d]"
                                      % (where, entry.get("shape"), layer.features))
            layer.momentum = float(entry["momentum"])
            layer.eps = float(entry["eps"])
            layer.running_mean = _array(entry["running_mean"], layer.features, where + " running_mean").reshape(1, -1)
            layer.running_var = _array(entry["running_var"], layer.features, where + " running_var").reshape(1, -1)
            if (layer.running_var < 0).any():
                raise CheckpointError("%s: negative running variance" % where)
    st = doc.get("standardization")
    standardization = None
    if st is not None:
        standardization = Standardization.from_dict(st)
        if standardization.mean.shape != (spec.input_dim,) or standardization.std.shape != (spec.input_dim,):
            raise CheckpointError("standardization width does not match input_dim %d" % spec.input_dim)
    model.standardization = standardization
    model.provenance = doc.get("provenance")
    model.eval()
    return model


def load_checkpoint(path):
    """Load a checkpoint into an eval-mode model."""
    try:
        with open(path, "rb") as fh:
            doc = orjson.loads(fh.read())
    except FileNotFoundError:
        raise CheckpointError("checkpoint not found: %s" % path) from None
    except orjson.JSONDecodeError as exc:
        raise CheckpointError("cannot parse checkpoint %s: %s" % (path, exc)) from exc
    return from_document(doc)
