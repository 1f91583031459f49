import json

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from jchsim.serialize import csv_text, dumps, series_rows, to_plain, write_atomic, write_json


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_round_trip_exactly(x):
    assert json.loads(dumps({"x": x}))["x"] == x


def test_special_values():
    plain = to_plain({"c": 1 + 2j, "n": float("nan"), "i": -np.inf, "a": np.arange(3), "b": np.bool_(True)})
    assert plain == {"c": {"re": 1.0, "im": 2.0}, "n": "nan", "i": "-inf", "a": [0, 1, 2], "b": True}
    json.loads(dumps(plain))


def test_dumps_is_key_order_independent():
    assert dumps({"b": 1, "a": 2}) == dumps({"a": 2, "b": 1})


def test_csv_cells():
    text = csv_text(["x", "ok", "note"], [[0.1, True, None], [np.float64(1 / 3), False, "a,b"]])
    assert text == 'x,ok,note\n0.1,true,\n0.3333333333333333,false,"a,b"\n'


def test_series_rows():
    cols, rows = series_rows({"t": [0.0, 1.0], "p": [1.0, 0.5]})
    assert cols == ["t", "p"] and rows == [[0.0, 1.0], [1.0, 0.5]]


def test_atomic_write_leaves_no_temporaries(tmp_path):
    target = tmp_path / "sub" / "out.json"
    write_json(target, {"a": 1})
    write_atomic(target, "replaced\n")
    assert target.read_text() == "replaced\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]
