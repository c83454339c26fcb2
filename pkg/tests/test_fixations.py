import pytest

from closureguide.fixations import FixationRecord, FixationSet


def _rec(subject, ordinal, x=1.0, y=1.0, image="im"):
    return FixationRecord(image, subject, ordinal, x, y, 10.0)


def test_drop_first_is_per_subject():
    fs = FixationSet("im", (_rec("a", 1), _rec("a", 2), _rec("b", 1), _rec("b", 2), _rec("b", 3)))
    assert len(fs.retained(True)) == len(fs) - 2
    assert len(fs.retained(False)) == len(fs)


def test_drop_first_only_removes_ordinal_one():
    fs = FixationSet("im", (_rec("a", 2), _rec("a", 3)))
    assert len(fs.retained(True)) == 2


def test_records_sorted_by_subject_then_ordinal():
    fs = FixationSet("im", (_rec("b", 2), _rec("a", 3), _rec("a", 1)))
    assert [(r.subject_id, r.ordinal) for r in fs.records] == [("a", 1), ("a", 3), ("b", 2)]
    assert fs.subjects == ["a", "b"]


@pytest.mark.parametrize("records,needle", [
    ((_rec("a", 1), _rec("a", 1)), "duplicate"),
    ((_rec("a", 0),), "ordinal"),
    ((_rec("a", 1, image="other"),), "record for image"),
])
def test_invalid_sets(records, needle):
    with pytest.raises(ValueError, match=needle):
        FixationSet("im", records)


def test_validate_bounds():
    fs = FixationSet.from_points([(0.0, 0.0), (3.99, 1.99)])
    fs.validate(4, 2)
    with pytest.raises(ValueError, match="out of range"):
        fs.validate(3, 2)


def test_coordinates_follow_retention():
    fs = FixationSet.from_points([(1.0, 2.0), (3.0, 4.0)])
    xs, ys = fs.coordinates(True)
    assert xs.tolist() == [3.0] and ys.tolist() == [4.0]
