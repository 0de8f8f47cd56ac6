import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bccxai.core import PatternVector
from bccxai.errors import AllUndefined, EmptyCounts, LengthMismatch, MissingImage
from bccxai.metrics import ConfusionCounts, confusion, evaluate, fold_aggregate, metrics_of, xai_group_eval

P = PatternVector.from_string


def test_confusion_examples():
    assert confusion([1, 0, 1], [1, 0, 1]) == ConfusionCounts(tp=2, fp=0, tn=1, fn=0)
    c = confusion([1] * 10, [1] * 9 + [0])
    assert (c.tp, c.fp) == (9, 1)
    assert confusion([0, 0], [1, 1]).fn == 2


def test_confusion_length_mismatch():
    with pytest.raises(LengthMismatch):
        confusion([1, 0], [1])
    with pytest.raises(LengthMismatch):
        confusion([], [])


def test_metrics_hand_arithmetic():
    m = metrics_of(ConfusionCounts(tp=9, fn=1, tn=8, fp=2))
    assert m["recall"] == pytest.approx(0.90)
    assert m["specificity"] == pytest.approx(0.80)
    assert m["precision"] == pytest.approx(9 / 11)
    assert m["accuracy"] == pytest.approx(0.85)


def test_metrics_undefined_and_perfect():
    assert metrics_of(ConfusionCounts(tn=3))["recall"] is None
    assert set(metrics_of(ConfusionCounts(tp=3, tn=2)).values()) == {1.0}
    with pytest.raises(EmptyCounts):
        metrics_of(ConfusionCounts())


@given(st.tuples(*[st.integers(0, 50)] * 4).filter(lambda t: sum(t) > 0), st.integers(2, 9))
def test_metrics_scale_free(counts, k):
    a = metrics_of(ConfusionCounts(*counts))
    b = metrics_of(ConfusionCounts(*(k * c for c in counts)))
    for key in a:
        assert (a[key] is None and b[key] is None) or a[key] == pytest.approx(b[key], abs=1e-15)


def test_fold_aggregate_examples():
    agg = fold_aggregate([{"recall": 0.8}, {"recall": 0.9}])["recall"]
    assert agg.mean == pytest.approx(0.85)
    assert agg.variance == pytest.approx(0.0025)
    assert fold_aggregate([{"recall": 0.7}])["recall"].variance == 0
    assert fold_aggregate([{"recall": 0.7}] * 4)["recall"].variance == 0


def test_fold_aggregate_excludes_undefined():
    agg = fold_aggregate([{"recall": None}, {"recall": 0.5}, {"recall": 1.0}])["recall"]
    assert (agg.n_folds, agg.excluded) == (2, 1)
    assert agg.mean == pytest.approx(0.75)
    with pytest.raises(AllUndefined):
        fold_aggregate([{"recall": None}, {"recall": None}])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_fold_aggregate_permutation_invariant(vals):
    base = fold_aggregate([{"m": v} for v in vals])["m"]
    for perm in itertools.islice(itertools.permutations(vals), 24):
        other = fold_aggregate([{"m": v} for v in perm])["m"]
        assert (other.mean, other.variance) == (base.mean, base.variance)
    assert base.variance >= 0


def test_xai_group_identity():
    vs = [P("0000000"), P("1000000"), P("0100000"), P("1000001")]
    out = xai_group_eval(vs, vs)
    for g in out.values():
        assert g["group_accuracy"] == 1.0


def test_xai_group_pigment_network_only():
    sr = [P("1000000")] * 4
    pred = [P("1000000")] * 3 + [P("0000000")]
    out = xai_group_eval(pred, sr)
    assert out["PigmentNetworkOnly"]["group_accuracy"] == 0.75
    assert out["NoPattern"]["group_accuracy"] is None
    assert sum(g["n"] for g in out.values()) == 4


def test_xai_bcc_pattern_detection_is_binary_task():
    sr = [P("0100000"), P("0010000"), P("0000000"), P("1000000")]
    pred = [P("0100000"), P("0000000"), P("0000001"), P("1000000")]
    c = xai_group_eval(pred, sr)["BccPattern"]["counts"]
    assert c == ConfusionCounts(tp=1, fn=1, fp=1, tn=1)


def test_xai_length_mismatch():
    with pytest.raises(LengthMismatch):
        xai_group_eval([P("0000000")], [])


def _fixture20():
    """20 images over 2 folds, hand-countable binary outcome."""
    sr, pred, folds = {}, {}, {}
    # fold 0: 6 BCC (5 detected), 4 non-BCC (1 false alarm)
    # fold 1: 4 BCC (4 detected), 6 non-BCC (0 false alarms)
    spec = [(0, "0100000", "0100000")] * 5 + [(0, "0100000", "0000000")] + [(0, "0000000", "0010000")] + [(0, "0000000", "0000000")] * 3
    spec += [(1, "0000001", "0000001")] * 4 + [(1, "1000000", "1000000")] * 6
    for n, (f, s, p) in enumerate(spec):
        sr[f"x{n:02d}"], pred[f"x{n:02d}"], folds[f"x{n:02d}"] = P(s), P(p), f
    return pred, sr, folds


def test_evaluate_hand_fixture():
    pred, sr, folds = _fixture20()
    rep = evaluate(pred, sr, folds)
    b = rep.targets["binary"]
    assert b.fold_counts[0] == ConfusionCounts(tp=5, fn=1, fp=1, tn=3)
    assert b.fold_counts[1] == ConfusionCounts(tp=4, fn=0, fp=0, tn=6)
    r = b.aggregate["recall"]
    assert r.mean == pytest.approx((5 / 6 + 1) / 2)
    assert r.variance == pytest.approx(((5 / 6 - 11 / 12) ** 2 + (1 - 11 / 12) ** 2) / 2)
    # spoke wheel is never present: recall/precision undefined everywhere
    assert rep.targets["SW"].aggregate["recall"] is None
    assert rep.targets["SW"].aggregate["accuracy"].mean == 1.0
    # no-pattern group: fold 0 has 3 of 4 SR no-pattern images right, fold 1 has none
    g = rep.targets["NoPattern"].aggregate["group_accuracy"]
    assert (g.mean, g.n_folds, g.excluded) == (0.75, 1, 1)


def test_evaluate_identity_all_ones():
    pred, sr, folds = _fixture20()
    rep = evaluate(sr, sr, folds)
    for t in rep.targets.values():
        for a in t.aggregate.values():
            assert a is None or a.mean == 1.0


def test_evaluate_missing_image():
    pred, sr, folds = _fixture20()
    del folds["x00"]
    with pytest.raises(MissingImage):
        evaluate(pred, sr, folds)
