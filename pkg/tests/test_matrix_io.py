"""
=============================================
🧪 矩阵文件读写测试
=============================================
"""

import numpy as np
import orjson
import pytest

from app.exceptions import InputFormatError, QSingularError
from app.matrix_io import load_any, read_perturbation, read_system, write_perturbation, write_system
from app.models import SetTag
from app.system import PerturbationTriple, validate


@pytest.fixture
def complex_system():
    J = np.array([[0.1j, 1.0 / 3.0], [-1.0 / 3.0, -0.7j]])
    return validate(np.diag([0.1, 0.0]), J, np.array([[1.0, 0.2j], [-0.2j, 1.0]]))


def _write_json(path, payload):
    path.write_bytes(orjson.dumps(payload))
    return path


class TestSystemFiles:
    """系统文件测试"""

    def test_json_exact(self, tmp_path, complex_system):
        """测试 JSON 写出后逐位读回"""
        path = tmp_path / "sys.json"
        assert write_system(complex_system, path) == [path]
        loaded = read_system(path)
        for name in ("E", "J", "R"):
            assert np.array_equal(getattr(loaded, name), getattr(complex_system, name))

    def test_matrix_market(self, tmp_path, complex_system):
        """测试 Matrix Market 文件组 (含虚部文件)"""
        written = write_system(complex_system, tmp_path / "sys")
        names = {p.name for p in written}
        assert "sys.J.im.mtx" in names
        assert "sys.E.im.mtx" not in names
        loaded = read_system(tmp_path / "sys.E.re.mtx")
        for name in ("E", "J", "R"):
            assert np.array_equal(getattr(loaded, name), getattr(complex_system, name))

    def test_q_factor(self, tmp_path):
        data = {
            "n": 1,
            "E": [[[1.0, 0.0]]],
            "J": [[[0.0, 0.0]]],
            "R": [[[1.0, 0.0]]],
            "Q": [[[2.0, 0.0]]],
        }
        loaded = read_system(_write_json(tmp_path / "q.json", data))
        assert loaded.E[0, 0] == 2.0
        assert loaded.R[0, 0] == 4.0

    def test_singular_q(self, tmp_path):
        data = {"n": 1, "E": [[[1.0, 0.0]]], "J": [[[0.0, 0.0]]], "R": [[[1.0, 0.0]]], "Q": [[[0.0, 0.0]]]}
        with pytest.raises(QSingularError):
            read_system(_write_json(tmp_path / "q.json", data))

    def test_missing_field(self, tmp_path):
        path = _write_json(tmp_path / "bad.json", {"n": 1, "E": [[[1.0, 0.0]]]})
        with pytest.raises(InputFormatError) as exc_info:
            read_system(path)
        assert "J, R" in str(exc_info.value)
        assert exc_info.value.path == str(path)

    def test_bad_entry(self, tmp_path):
        data = {"n": 1, "E": [[1.0]], "J": [[[0.0, 0.0]]], "R": [[[1.0, 0.0]]]}
        with pytest.raises(InputFormatError) as exc_info:
            read_system(_write_json(tmp_path / "bad.json", data))
        assert "E[0][0]" in str(exc_info.value)

    def test_zero_order(self, tmp_path):
        """测试 n = 0 的系统文件被拒绝"""
        data = {"n": 0, "E": [], "J": [], "R": []}
        with pytest.raises(InputFormatError) as exc_info:
            read_system(_write_json(tmp_path / "empty.json", data))
        assert "正整数" in str(exc_info.value)

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(InputFormatError):
            read_system(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputFormatError) as exc_info:
            load_any(tmp_path / "absent.json")
        assert "文件不存在" in str(exc_info.value)


class TestPerturbationFiles:
    """扰动文件测试"""

    def test_round_trip(self, tmp_path):
        Z = np.zeros((2, 2), dtype=complex)
        triple = PerturbationTriple(Z, Z, -np.diag([0.0, 1.0]).astype(complex), SetTag.SD_JR)
        path = write_perturbation(triple, tmp_path / "w.json")
        loaded = read_perturbation(path, n=2)
        assert loaded.set_tag == SetTag.SD_JR
        assert np.array_equal(loaded.dR, triple.dR)

    def test_dimension_mismatch(self, tmp_path):
        triple = PerturbationTriple.zeros(2)
        path = write_perturbation(triple, tmp_path / "w.json")
        with pytest.raises(InputFormatError) as exc_info:
            read_perturbation(path, n=3)
        assert "不一致" in str(exc_info.value)

    def test_unknown_set(self, tmp_path):
        data = {"n": 1, "dE": [[[0.0, 0.0]]], "dJ": [[[0.0, 0.0]]], "dR": [[[0.0, 0.0]]], "set": "Sx"}
        with pytest.raises(InputFormatError):
            read_perturbation(_write_json(tmp_path / "w.json", data))
