import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from srgeodesics.outputs import atomic_write, csv_text, format_float, json_text, level_set_svg


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_float_round_trips(x):
    assert float(format_float(x)) == x


def test_csv_cells():
    text = csv_text(["a", "b", "c", "d", "e"], [(1, 0.1, True, None, "x,y")])
    assert text == 'a,b,c,d,e\n1,0.10000000000000001,true,,"x,y"\n'
    assert "\r" not in text


def test_json_sorted_and_nonfinite():
    text = json_text({"b": 1.0, "a": [math.inf, np.float64(0.5), np.int64(3), False, None]})
    assert text == '{"a": [null, 0.5, 3, false, null], "b": 1}\n'
    assert json.loads(text)["b"] == 1


def test_json_rejects_unknown():
    with pytest.raises(TypeError):
        json_text({"a": object()})


def test_atomic_write(tmp_path):
    p = tmp_path / "out.txt"
    atomic_write(str(p), b"first")
    atomic_write(str(p), b"second")
    assert p.read_bytes() == b"second"
    assert [f.name for f in tmp_path.iterdir()] == ["out.txt"]


def test_level_set_svg():
    svg = level_set_svg([-1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert 'class="level separatrix" data-level="1.0"' in svg
    assert 'class="level equilibrium"' in svg
    assert svg == level_set_svg([2.0, 1.0, 0.5, 0.0, -0.5, -1.0])
