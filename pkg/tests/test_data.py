import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirs.data import CONV, CSV_COLUMNS, PROB, CompletedDataset, DataMatrix, empty_data, read_csv, write_csv
from mirs.errors import InputError, MaskError

HEADER = ",".join(CSV_COLUMNS) + "\n"


def _write(tmp_path, body, name="in.csv"):
    path = tmp_path / name
    path.write_text(HEADER + body)
    return path


def test_read_three_rows_one_missing(tmp_path):
    path = _write(tmp_path, "0.1,0.2,1,prob,0.02\n-1.5,0.3,,conv,1\n2,2,0,conv,0.5\n")
    data = read_csv(path)
    assert data.n == 3
    assert data.n_missing == 1
    assert list(data.y_observed) == [True, False, True]
    assert list(data.source) == [PROB, CONV, CONV]
    assert data.x1[1] == -1.5


@pytest.mark.parametrize("row, needle", [
    ("0,0,1,panel,0.02\n", "panel"),
    ("0,0,2,prob,0.02\n", "y="),
    ("0,0,1,prob,0\n", "p_s"),
    ("0,0,1,prob,1.5\n", "p_s"),
    ("0,abc,1,prob,0.02\n", "x2"),
    ("0,nan,1,prob,0.02\n", "x2"),
    ("0,0,1,prob\n", "fields"),
    ("0,0,1,prob,0.02,9\n", "fields"),
])
def test_read_errors_name_the_row(tmp_path, row, needle):
    path = _write(tmp_path, "1,1,0,conv,1\n" + row)
    with pytest.raises(InputError) as exc:
        read_csv(path)
    assert "row 2" in str(exc.value)
    assert needle in str(exc.value)


def test_read_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,x2,y,p_s\n0,0,1,0.5\n")
    with pytest.raises(InputError, match="source"):
        read_csv(path)


def test_write_empty_is_header_only(tmp_path):
    path = tmp_path / "e.csv"
    write_csv(empty_data(), path)
    assert path.read_text() == HEADER
    assert read_csv(path).n == 0


def test_write_all_observed_has_no_empty_y(tmp_path, complete_dataset):
    path = tmp_path / "c.csv"
    write_csv(complete_dataset, path)
    lines = path.read_text().splitlines()[1:]
    assert len(lines) == complete_dataset.n
    assert all(line.split(",")[2] in ("0", "1") for line in lines)


finite = st.floats(-1e6, 1e6, allow_nan=False)


@st.composite
def datasets(draw):
    n = draw(st.integers(0, 30))
    return DataMatrix(
        x1=draw(st.lists(finite, min_size=n, max_size=n)),
        x2=draw(st.lists(finite, min_size=n, max_size=n)),
        y=draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)),
        y_observed=draw(st.lists(st.booleans(), min_size=n, max_size=n)),
        source=draw(st.lists(st.sampled_from([PROB, CONV]), min_size=n, max_size=n)),
        p_s=draw(st.lists(st.floats(1e-6, 1.0), min_size=n, max_size=n)),
    )


@settings(max_examples=60, deadline=None)
@given(datasets())
def test_round_trip(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    write_csv(data, path)
    back = read_csv(path)
    assert back.same_as(data)
    assert np.array_equal(back.x1, data.x1)  # repr keeps every bit


def test_round_trip_simulated(tmp_path, dgp_dataset):
    path = tmp_path / "s.csv"
    write_csv(dgp_dataset, path)
    assert read_csv(path).same_as(dgp_dataset)


def test_masked_outcome_is_not_handed_out(dgp_dataset, complete_dataset):
    assert dgp_dataset.n_missing > 0
    with pytest.raises(MaskError):
        dgp_dataset.observed_y()
    assert np.array_equal(complete_dataset.observed_y(), complete_dataset.y)


def test_columns_are_read_only(dgp_dataset):
    with pytest.raises(ValueError):
        dgp_dataset.x1[0] = 3.0


def test_take_gives_duplicates_distinct_identities():
    data = DataMatrix(x1=[0.0, 1.0, 2.0], x2=[0.0, 0.0, 0.0], y=[1, 0, 1], y_observed=[True] * 3,
                      source=[PROB, CONV, CONV], p_s=[0.02] * 3)
    rep = data.take([0, 0, 2])
    assert rep.n == 3
    assert rep.x1[0] == rep.x1[1] == 0.0
    assert list(rep.case_id) == [0, 0, 2]
    assert len({(c, d) for c, d in zip(rep.case_id, rep.dup)}) == 3
    # a replicate of a replicate still has unique identities
    rep2 = rep.take([0, 1, 0, 1, 2])
    assert len({(c, d) for c, d in zip(rep2.case_id, rep2.dup)}) == 5


def test_with_mask_only_hides():
    data = DataMatrix(x1=[0.0, 1.0], x2=[0.0, 0.0], y=[1, 0], y_observed=[True, False],
                      source=[PROB, CONV], p_s=[0.02] * 2)
    assert list(data.with_mask([False, True]).y_observed) == [False, False]


@pytest.mark.parametrize("kwargs", [
    dict(y=[2, 0]),
    dict(source=[0, 5]),
    dict(x2=[0.0]),
])
def test_invalid_matrix(kwargs):
    base = dict(x1=[0.0, 1.0], x2=[0.0, 0.0], y=[1, 0], y_observed=[True, True], source=[0, 1], p_s=[0.1, 0.1])
    base.update(kwargs)
    with pytest.raises(InputError):
        DataMatrix(**base)


def test_completed_dataset_preserves_observed():
    data = DataMatrix(x1=[0.0, 1.0], x2=[0.0, 0.0], y=[1, 0], y_observed=[True, False],
                      source=[PROB, CONV], p_s=[0.02] * 2)
    CompletedDataset(data, [1, 1])
    with pytest.raises(InputError):
        CompletedDataset(data, [0, 1])
