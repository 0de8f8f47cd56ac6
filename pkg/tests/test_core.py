import pytest
from hypothesis import given
from hypothesis import strategies as st

from bccxai import formats
from bccxai.core import AnnotationDataset, Pattern, PatternVector, validate_dataset
from bccxai.errors import BadVectorLength, DuplicateAnnotation, NonBinaryValue


def test_pattern_order_is_fixed():
    assert [p.code for p in Pattern] == ["PN", "U", "ON", "MG", "ML", "SW", "AT"]
    assert Pattern(0) is Pattern.PIGMENT_NETWORK
    assert [p for p in Pattern if p.is_negative_criterion] == [Pattern.PIGMENT_NETWORK]


def test_validate_well_formed():
    ds = validate_dataset(
        [("a", "r1", "0101101"), ("a", "r2", [0, 0, 0, 0, 0, 0, 0]), ("b", "r1", "1000000")]
    )
    assert len(ds) == 3
    assert ds.images == {"a", "b"}
    assert ds.raters == {"r1", "r2"}


def test_validate_duplicate():
    with pytest.raises(DuplicateAnnotation) as exc:
        validate_dataset([("a", "r1", "0000000"), ("a", "r1", "1111111")])
    assert exc.value.details == {"image": "a", "rater": "r1"}


def test_validate_bad_length():
    with pytest.raises(BadVectorLength) as exc:
        validate_dataset([("a", "r1", "000000")])
    assert exc.value.details["row"] == 1


@pytest.mark.parametrize("bad", [[0, 1, 2, 0, 0, 0, 0], ["0", "x", "0", "0", "0", "0", "0"], [0.0] * 7])
def test_validate_non_binary(bad):
    with pytest.raises(NonBinaryValue):
        validate_dataset([("a", "r1", bad)])


def test_mapping_rows_with_pattern_columns():
    row = {"image_id": "a", "rater_id": "r", "pn": "1", "u": "0", "on": "0", "mg": "0", "ml": "0", "sw": "0", "at": "1"}
    ds = validate_dataset([row])
    assert ds.records[0].labels == PatternVector("1000001")


def test_vector_helpers():
    v = PatternVector.from_string("[0 1 0 1 1 0 1]")
    assert v.present() == [Pattern.ULCERATION, Pattern.MULTIGLOBULES, Pattern.MAPLE_LEAF_LIKE, Pattern.ARBORIZING_TELANGIECTASIA]
    assert v.to_string() == "0101101"
    assert PatternVector.from_patterns(v.present()) == v


records = st.lists(
    st.tuples(
        st.text("abcxyz_0123", min_size=1, max_size=4),
        st.text("rst", min_size=1, max_size=2),
        st.lists(st.booleans(), min_size=7, max_size=7),
    ),
    max_size=30,
    unique_by=lambda t: (t[0], t[1]),
)


@given(records)
def test_csv_round_trip(tmp_path_factory, rows):
    ds = validate_dataset(rows)
    path = tmp_path_factory.mktemp("rt") / "a.csv"
    formats.write_annotations(path, ds)
    back = formats.read_annotations(path)
    assert back.canonical() == ds.canonical()


@given(st.lists(st.booleans(), min_size=7, max_size=7))
def test_vector_string_round_trip(bits):
    v = PatternVector(bits)
    assert PatternVector.from_string(v.to_string()) == v
    assert list(v) == bits


def test_dataset_is_immutable():
    ds = AnnotationDataset(())
    with pytest.raises(AttributeError):
        ds.records = ()
