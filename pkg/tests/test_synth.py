import numpy as np
import pytest

from deconfound.presets import cm, dcm, wlm
from deconfound.render import GLYPHS, RenderNoise, foreground_mask, render
from deconfound.synth import (
    Dataset,
    interventional_sample,
    oracle_counterfactual,
    oracle_counterfactual_batch,
    read_dataset,
    sample_assignment,
    sample_assignments,
    stream_seed,
    synth_dataset,
    write_dataset,
)


def test_same_seed_same_bytes(cm4):
    a = synth_dataset(cm4, 200, "train")
    b = synth_dataset(cm4, 200, "train")
    assert a.images.tobytes() == b.images.tobytes()
    assert np.array_equal(a.attrs, b.attrs)
    c = synth_dataset(cm4, 200, "train", seed=1)
    assert not np.array_equal(a.attrs, c.attrs)


def test_chunks_and_workers_match_serial(cm4):
    serial = synth_dataset(cm4, 300, "train")
    chunked = synth_dataset(cm4, 300, "train", chunk=64, workers=3)
    assert serial.images.tobytes() == chunked.images.tobytes()
    attrs, noise = sample_assignments(cm4, 50, stream_seed(0, "train"), start=100)
    np.testing.assert_array_equal(attrs, serial.attrs[100:150])
    np.testing.assert_array_equal(noise, serial.noise[100:150])
    one, _ = sample_assignment(cm4, stream_seed(0, "train"), index=7)
    assert list(one.values()) == serial.attrs[7].tolist()


def test_splits_use_distinct_streams(cm4):
    tr = synth_dataset(cm4, 100, "train")
    te = synth_dataset(cm4, 100, "test")
    assert not np.array_equal(tr.noise, te.noise)


def test_train_follows_theme_and_test_is_unconfounded():
    spec = cm(d=4, p=0.95)
    attrs, _ = sample_assignments(spec, 40000, stream_seed(0, "train"))
    assert np.mean(attrs[:, 0] == attrs[:, 1]) == pytest.approx(0.95 + 0.05 / 4, abs=0.01)
    test = sample_assignments(spec.unconfounded(), 40000, stream_seed(0, "test"))[0]
    counts = np.bincount(test[:, 0] * 4 + test[:, 1], minlength=16) / len(test)
    assert np.abs(counts - 1 / 16).max() < 0.006
    # thickness is tied to the digit by an override, zeroed on the test split
    assert np.mean(test[:, 2] == (test[:, 0] >= 2)) == pytest.approx(0.5, abs=0.02)


def test_do_intervention_cuts_mechanism():
    spec = cm(d=4, p=1.0)
    attrs, _ = sample_assignments(spec, 2000, 0, do={"color": 2})
    assert (attrs[:, 1] == 2).all()
    assert len(np.unique(attrs[:, 0])) == 4
    # forcing the label leaves the confounder state, and so the color, untouched
    a, _ = interventional_sample(spec, {"digit": 3})
    assert a["digit"] == 3
    forced, _ = sample_assignments(spec, 4000, 0, do={"digit": 3})
    assert np.abs(np.bincount(forced[:, 1], minlength=4) / 4000 - 0.25).max() < 0.03
    with pytest.raises(ValueError):
        sample_assignments(spec, 1, 0, do={"color": 9})
    with pytest.raises(KeyError):
        sample_assignments(spec, 1, 0, do={"nope": 0})


def test_null_intervention_is_identity(small_train, cm4):
    s = small_train[5]
    cf = oracle_counterfactual(s, {"color": s.assignment["color"]}, cm4.render, cm4.schema, 5)
    assert cf.image.tobytes() == s.image.tobytes()
    assert cf.origin.source_index == 5 and cf.origin.mapper_kind == "oracle"


def test_color_counterfactual_touches_only_glyph(small_train, cm4):
    idx = np.arange(50)
    vals = (small_train.column("color")[idx] + 1) % 4
    cfs = oracle_counterfactual_batch(small_train, idx, "color", vals, cm4.render)
    mask = foreground_mask(cm4.schema, small_train.attrs[idx], small_train.noise[idx], cm4.render)
    same = (cfs.images == small_train.images[idx]).all(axis=-1)
    assert same[~mask].all()
    assert not same[mask].any()
    changed = cfs.attrs != small_train.attrs[idx]
    assert changed[:, 1].all() and not changed[:, [0, 2]].any()


def test_render_shapes_and_background(cm4):
    img = render(cm4.schema, {"digit": 1, "color": 0, "thickness": 0}, RenderNoise(), cm4.render)
    assert img.shape == (16, 16, 3) and img.dtype == np.uint8
    assert (img[0] == 0).all()
    assert tuple(img[img.sum(axis=-1) > 0][0]) == cm4.render.palette[0]


def test_glyphs_distinct():
    flat = GLYPHS.reshape(len(GLYPHS), -1)
    assert len({r.tobytes() for r in flat}) == len(GLYPHS)


def test_thickness_grows_mask(cm4):
    noise = np.zeros((2, 4), dtype=np.int64)
    attrs = np.array([[3, 0, 0], [3, 0, 1]])
    m = foreground_mask(cm4.schema, attrs, noise, cm4.render)
    assert m[1].sum() > m[0].sum() and (m[1] | m[0] == m[1]).all()


@pytest.mark.parametrize("factory", [cm, dcm, wlm])
def test_presets_render(factory):
    spec = factory(d=4, p=0.9)
    data = synth_dataset(spec, 64, "train")
    assert data.images.shape == (64, 16, 16, 3)
    assert len(np.unique(data.images.reshape(64, -1), axis=0)) > 32


def test_container_round_trip(tmp_path, small_train, cm4):
    p = write_dataset(small_train, tmp_path / "d")
    back = read_dataset(p)
    assert back.images.tobytes() == small_train.images.tobytes()
    np.testing.assert_array_equal(back.attrs, small_train.attrs)
    np.testing.assert_array_equal(back.noise, small_train.noise)
    assert back.spec_hash == cm4.hash and back.split == "train"
    p2 = write_dataset(back, tmp_path / "e")
    assert (p2 / "images.bin").read_bytes() == (p / "images.bin").read_bytes()


def test_container_keeps_origin(tmp_path, small_train, cm4):
    cfs = oracle_counterfactual_batch(small_train, [3, 9], "color", [1, 2], cm4.render)
    back = read_dataset(write_dataset(cfs, tmp_path / "cf"))
    assert back.source_index.tolist() == [3, 9]
    assert list(back.intervened_attribute) == ["color", "color"]
    assert back[0].origin.kind == "counterfactual"


def test_container_rejects_truncated_images(tmp_path, small_train):
    p = write_dataset(small_train.subset(np.arange(4)), tmp_path / "t")
    (p / "images.bin").write_bytes((p / "images.bin").read_bytes()[:-1])
    with pytest.raises(ValueError):
        read_dataset(p)


def test_concat_and_subset(small_train):
    a, b = small_train.subset([0, 1]), small_train.subset([2])
    c = Dataset.concat(a, b)
    assert len(c) == 3
    np.testing.assert_array_equal(c.images, small_train.images[:3])


def test_bad_sizes(cm4):
    with pytest.raises(ValueError):
        synth_dataset(cm4, 0)
    with pytest.raises(ValueError):
        synth_dataset(cm4, 5, "validation")
