import numpy as np
import pytest

from rvcv.errors import InvalidArgumentError
from rvcv.grf.io import read_graph, read_lattice, write_graph, write_lattice


def test_lattice_round_trip(tmp_path):
    y = np.array([[1, -1, 1], [-1, -1, 1]])
    write_lattice(tmp_path / "y.txt", y)
    back, mapped = read_lattice(tmp_path / "y.txt")
    np.testing.assert_array_equal(back, y)
    assert not mapped


def test_zero_one_lattice_is_mapped(tmp_path, caplog):
    (tmp_path / "y.txt").write_text("0 1\n1 1\n")
    back, mapped = read_lattice(tmp_path / "y.txt")
    assert mapped
    np.testing.assert_array_equal(back, [[-1, 1], [1, 1]])
    assert "mapped" in caplog.text


def test_ragged_lattice(tmp_path):
    (tmp_path / "y.txt").write_text("1 1\n1\n")
    with pytest.raises(InvalidArgumentError):
        read_lattice(tmp_path / "y.txt")


@pytest.mark.parametrize("fmt", ["matrix", "edgelist"])
def test_graph_round_trip(tmp_path, fmt):
    a = np.zeros((5, 5), dtype=int)
    a[0, 3] = a[3, 0] = a[1, 4] = a[4, 1] = 1
    write_graph(tmp_path / "g.txt", a, fmt=fmt)
    back = read_graph(tmp_path / "g.txt", fmt=fmt, n=5)
    np.testing.assert_array_equal(back, a)


def test_edgelist_with_comments_and_isolated_nodes(tmp_path):
    (tmp_path / "g.txt").write_text("# two edges\n0 1\n1 2  # tail\n")
    assert read_graph(tmp_path / "g.txt").shape == (3, 3)
    assert read_graph(tmp_path / "g.txt", fmt="edgelist", n=6).shape == (6, 6)


def test_bad_graph_files(tmp_path):
    (tmp_path / "g.txt").write_text("0 1 2\n")
    with pytest.raises(InvalidArgumentError):
        read_graph(tmp_path / "g.txt", fmt="edgelist")
    (tmp_path / "e.txt").write_text("\n")
    with pytest.raises(InvalidArgumentError):
        read_graph(tmp_path / "e.txt")
    with pytest.raises(InvalidArgumentError):
        read_graph(tmp_path / "g.txt", fmt="gml")
