import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regunet.checkpoint import VERSION, from_document, load_checkpoint, save_checkpoint, to_document
from regunet.data import Standardization
from regunet.errors import CheckpointError
from regunet.models import VARIANTS, ModelSpec, build


def trained_like(variant, seed=0, batchnorm=None):
    """A small model whose BN running stats have moved away from their initial values."""
    model = build(ModelSpec(variant, input_dim=5, hidden_width=6, head_width=4, seed=seed, batchnorm=batchnorm))
    X = np.random.default_rng(seed).normal(size=(10, 5))
    model.train().forward(X)
    model.eval()
    model.standardization = Standardization(np.arange(5.0), np.full(5, 2.0))
    model.provenance = {"synthetic": True, "seed": seed}
    return model, X


@pytest.mark.parametrize("variant", VARIANTS)
def test_round_trip_preserves_outputs(tmp_path, variant):
    model, X = trained_like(variant)
    path = tmp_path / "m.json"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.mode == "eval"
    assert np.max(np.abs(loaded.forward(X) - model.forward(X))) <= 1e-12
    assert loaded.param_count() == model.param_count()
    assert loaded.spec == model.spec
    assert np.array_equal(loaded.standardization.mean, model.standardization.mean)
    assert loaded.provenance == model.provenance


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32), variant=st.sampled_from(VARIANTS), bn=st.sampled_from([None, True, False]))
def test_round_trip_is_bit_exact(seed, variant, bn):
    model, X = trained_like(variant, seed, bn)
    loaded = from_document(json.loads(json.dumps(to_document(model))))
    for a, b in zip(model.parameters(), loaded.parameters()):
        assert np.array_equal(a, b)
    for a, b in zip(model.batchnorm_layers(), loaded.batchnorm_layers()):
        assert np.array_equal(a.running_mean, b.running_mean)
        assert np.array_equal(a.running_var, b.running_var)
    assert np.array_equal(model.forward(X), loaded.forward(X))


def test_document_layout():
    model, _ = trained_like("concat")
    doc = to_document(model)
    assert list(doc) == ["version", "spec", "layers", "standardization", "rng_seed", "provenance"]
    assert doc["version"] == VERSION
    kinds = {entry["kind"] for entry in doc["layers"]}
    assert kinds == {"dense", "batchnorm"}


def test_save_is_atomic_over_existing_file(tmp_path):
    model, _ = trained_like("l2_reg")
    path = tmp_path / "m.json"
    path.write_text("old")
    save_checkpoint(model, path)
    assert json.loads(path.read_text())["version"] == VERSION
    assert [p.name for p in tmp_path.iterdir()] == ["m.json"]


def tamper(model, edit):
    doc = json.loads(json.dumps(to_document(model)))
    edit(doc)
    return doc


@pytest.mark.parametrize("edit, message", [
    (lambda d: d.update(version="regunet-ckpt-0"), "version"),
    (lambda d: d["layers"][0].update(shape=[5, 7]), "shape"),
    (lambda d: d["layers"][0].update(W=d["layers"][0]["W"][:-1]), "expected"),
    (lambda d: d["layers"][0].update(name="other"), "mismatch"),
    (lambda d: d["layers"].pop(), "layers"),
    (lambda d: d["layers"][0]["W"].__setitem__(0, float("nan")), "non-finite"),
    (lambda d: d["spec"].update(variant="resnet"), "spec"),
    (lambda d: d.pop("spec"), "malformed"),
    (lambda d: d["standardization"].update(mean=[0.0] * 4), "standardization"),
])
def test_tampered_checkpoints_rejected(edit, message):
    model, _ = trained_like("concat")
    with pytest.raises(CheckpointError, match=message):
        from_document(tamper(model, edit))


def test_negative_running_variance_rejected():
    model, _ = trained_like("concat")

    def edit(doc):
        bn = next(e for e in doc["layers"] if e["kind"] == "batchnorm")
        bn["running_var"][0] = -1.0

    with pytest.raises(CheckpointError, match="variance"):
        from_document(tamper(model, edit))


def test_load_errors(tmp_path):
    with pytest.raises(CheckpointError, match="not found"):
        load_checkpoint(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    with pytest.raises(CheckpointError, match="parse"):
        load_checkpoint(bad)
    bad.write_text("[]")
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(bad)


def test_model_without_standardization_round_trips():
    model = build(ModelSpec("l1_reg", input_dim=3, hidden_width=4))
    loaded = from_document(to_document(model))
    assert loaded.standardization is None and loaded.provenance is None
