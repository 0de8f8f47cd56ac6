import logging

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from PIL import Image

from bccxai.errors import DimensionMismatch, EmptyRegion, GridMismatch
from bccxai.formats import load_mask
from bccxai.saliency import (
    SaliencyPair,
    analyze,
    batch_saliency,
    bin_index,
    conditional_pdfs,
    dice_jaccard,
    normalize_heatmap,
    pdf_intersection,
)

from oracles import naive_saliency


def _check_against_oracle(raw, mask, bins, tol=1e-12):
    got = analyze(raw, mask, bins=bins)
    ref = naive_saliency(raw.tolist(), mask.tolist(), bins)
    for key in ("mean_fg", "mean_bg", "std_fg", "std_bg", "intersection"):
        assert abs(getattr(got, key) - ref[key]) <= tol, key
    assert np.max(np.abs(got.pdf_fg - ref["pdf_fg"])) <= tol
    assert np.max(np.abs(got.pdf_bg - ref["pdf_bg"])) <= tol
    assert (got.n_fg, got.n_bg) == (ref["n_fg"], ref["n_bg"])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 20), st.integers(2, 20), st.integers(0, 2**32 - 1), st.sampled_from([4, 16, 64]))
def test_matches_per_pixel_oracle(h, w, seed, bins):
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(h, w)) * rng.uniform(0.1, 100)
    mask = rng.random((h, w)) < rng.uniform(0.1, 0.9)
    assume(mask.any() and not mask.all())
    _check_against_oracle(raw, mask, bins)


def test_heatmap_equal_to_mask():
    mask = np.zeros((8, 8), dtype=bool)
    mask[2:5, 3:7] = True
    s = analyze(mask.astype(float), mask)
    assert (s.mean_fg, s.mean_bg, s.std_fg, s.std_bg) == (1.0, 0.0, 0.0, 0.0)
    assert s.intersection == 0.0
    assert s.dice == s.jaccard == 1.0


def test_empty_regions():
    raw = np.arange(16.0).reshape(4, 4)
    with pytest.raises(EmptyRegion) as e:
        analyze(raw, np.zeros((4, 4), dtype=bool))
    assert e.value.details["region"] == "Fg"
    with pytest.raises(EmptyRegion) as e:
        analyze(raw, np.ones((4, 4), dtype=bool))
    assert e.value.details["region"] == "Bg"


def test_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        analyze(np.zeros((3, 3)), np.zeros((3, 4), dtype=bool))


def test_intersection_identical_distributions():
    # each region holds one pixel at 0 and one at 1
    raw = np.array([[0.0, 1.0], [0.0, 1.0]])
    mask = np.array([[True, True], [False, False]])
    assert analyze(raw, mask, bins=4).intersection == pytest.approx(1.0, abs=1e-9)


def test_intersection_disjoint():
    raw = np.array([[1.0, 1.0], [0.0, 0.0]])
    mask = np.array([[True, True], [False, False]])
    assert analyze(raw, mask, bins=4).intersection == pytest.approx(0.0, abs=1e-9)


def test_intersection_uniform_vs_half_uniform():
    # Fg spreads over all four bins, Bg only over the lower two
    raw = np.array([[0.0, 0.375, 0.625, 1.0], [0.1, 0.3, 0.1, 0.3]])
    mask = np.array([[True] * 4, [False] * 4])
    s = analyze(raw, mask, bins=4)
    assert s.pdf_fg.tolist() == [1.0, 1.0, 1.0, 1.0]
    assert s.pdf_bg.tolist() == [2.0, 2.0, 0.0, 0.0]
    assert s.intersection == pytest.approx(0.5, abs=1e-9)


def test_pdf_intersection_validation():
    with pytest.raises(GridMismatch):
        pdf_intersection(np.ones(4), np.ones(8))
    with pytest.raises(ValueError):
        pdf_intersection(np.ones(4), np.full(4, 2.0))
    assert pdf_intersection(np.ones(4), np.ones(4)) == 1.0


def test_pdfs_integrate_to_one_and_last_bin_closed():
    rng = np.random.default_rng(3)
    z = rng.random((10, 10))
    z[0, 0], z[0, 1] = 0.0, 1.0
    mask = rng.random((10, 10)) < 0.5
    mask[0, 0] = True
    for pdf in conditional_pdfs(z, mask, bins=16):
        assert pdf.sum() / 16 == pytest.approx(1.0, abs=1e-12)
    assert bin_index(np.array([0.0, 0.999, 1.0]), 8).tolist() == [0, 7, 7]


def test_dice_jaccard_subset():
    # thresholded heatmap covers half of the mask
    mask = np.zeros((4, 4), dtype=bool)
    mask[:, :2] = True
    z = np.zeros((4, 4))
    z[:, 0] = 1.0
    dj = dice_jaccard(z, mask)
    assert dj["jaccard"] == pytest.approx(0.5)
    assert dj["dice"] == pytest.approx(2 / 3)


def test_dice_jaccard_both_empty():
    assert dice_jaccard(np.zeros((3, 3)), np.zeros((3, 3), dtype=bool)) == {"dice": 1.0, "jaccard": 1.0}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_dice_at_least_jaccard(seed, thr):
    rng = np.random.default_rng(seed)
    z, mask = rng.random((9, 7)), rng.random((9, 7)) < 0.4
    dj = dice_jaccard(z, mask, thr)
    assert dj["dice"] >= dj["jaccard"] - 1e-15
    assert 0 <= dj["jaccard"] <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_complement_swaps_regions(seed):
    rng = np.random.default_rng(seed)
    raw = rng.random((12, 10))
    mask = rng.random((12, 10)) < 0.5
    assume(mask.any() and not mask.all())
    a, b = analyze(raw, mask), analyze(raw, ~mask)
    assert (a.mean_fg, a.std_fg) == (b.mean_bg, b.std_bg)
    assert (a.mean_bg, a.std_bg) == (b.mean_fg, b.std_fg)
    assert a.intersection == pytest.approx(b.intersection, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.25, 0.5, 2.0, 8.0, 1024.0]), st.integers(-512, 512))
def test_positive_affine_invariance(seed, scale, shift):
    # integer-valued maps with power-of-two scales keep the arithmetic exact
    rng = np.random.default_rng(seed)
    raw = rng.integers(0, 256, (16, 16)).astype(float)
    mask = rng.random((16, 16)) < 0.5
    assume(mask.any() and not mask.all() and raw.max() > raw.min())
    a, b = analyze(raw, mask).summary(), analyze(raw * scale + shift, mask).summary()
    assert a == b


def test_constant_map_flagged(caplog):
    mask = np.eye(4, dtype=bool)
    with caplog.at_level(logging.WARNING):
        s = analyze(np.full((4, 4), 7.0), mask)
    assert s.constant_map
    assert normalize_heatmap(np.full((2, 2), 3.0)).z.tolist() == [[0.0, 0.0], [0.0, 0.0]]
    assert s.intersection == 1.0
    assert "constant" in caplog.text


def _disc_mask(n=32, r=8):
    yy, xx = np.mgrid[:n, :n]
    return (yy - n / 2) ** 2 + (xx - n / 2) ** 2 < r * r


def test_batch_perfect_focus():
    mask = _disc_mask()
    pairs = [SaliencyPair(f"p{i}", mask.astype(float) * (i + 1), mask, True) for i in range(3)]
    rep = batch_saliency(pairs)
    g = rep.groups["Correct"]
    assert g["intersection"] == 0.0 and g["mean_fg"] == 1.0 and g["n"] == 3
    assert rep.groups["Incorrect"] is None


def test_batch_empty_input():
    rep = batch_saliency([])
    assert rep.warnings and rep.groups == {"Correct": None, "Incorrect": None}


def test_batch_group_means_and_errors():
    rng = np.random.default_rng(11)
    pairs, stats = [], {True: [], False: []}
    for i in range(20):
        raw, mask = rng.random((24, 24)), rng.random((24, 24)) < 0.3
        pairs.append(SaliencyPair(f"im{i:02d}", raw, mask, i % 3 != 0))
        stats[i % 3 != 0].append(analyze(raw, mask))
    pairs.append(SaliencyPair("bad", np.zeros((3, 3)), np.zeros((4, 4), dtype=bool), True))
    rep = batch_saliency(pairs)
    assert set(rep.errors) == {"bad"} and len(rep.pairs) == 20
    for name, flag in (("Correct", True), ("Incorrect", False)):
        g = rep.groups[name]
        assert g["n"] == len(stats[flag])
        assert g["intersection"] == pytest.approx(np.mean([s.intersection for s in stats[flag]]), abs=1e-12)
        assert g["std_bg"] == pytest.approx(np.mean([s.std_bg for s in stats[flag]]), abs=1e-12)


def test_mask_file_threshold_and_resize(tmp_path):
    arr = np.array([[0, 127], [128, 255]], dtype=np.uint8)
    Image.fromarray(arr).save(tmp_path / "m.png")
    assert load_mask(tmp_path / "m.png").tolist() == [[False, False], [True, True]]
    big = load_mask(tmp_path / "m.png", shape=(4, 4))
    assert big.tolist() == [[False] * 4] * 2 + [[True] * 4] * 2
