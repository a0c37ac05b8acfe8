"""
Testes para a escrita de relatórios e amostras.
"""
import json

import numpy as np

from app.infrastructure.sample_writer import ReportWriter, to_jsonable


class TestToJsonable:
    """Testes para to_jsonable."""

    def test_numpy_and_non_finite(self):
        """Arrays viram listas; inf e nan viram strings."""
        value = {"a": np.array([1.0, np.inf]), "b": np.int64(3), "c": np.bool_(True), 4: float("nan")}

        assert to_jsonable(value) == {"a": [1.0, "inf"], "b": 3, "c": True, "4": "nan"}


class TestReportWriter:
    """Testes para ReportWriter."""

    def test_write_json(self, tmp_path):
        """Chaves ordenadas, indentação 2 e quebra de linha final."""
        path = ReportWriter(str(tmp_path / "out")).write_json("r.json", {"b": 1, "a": np.float64(0.5)})

        text = path.read_text(encoding="utf-8")
        assert text == '{\n  "a": 0.5,\n  "b": 1\n}\n'
        assert json.loads(text) == {"a": 0.5, "b": 1}

    def test_write_csv(self, tmp_path):
        """Cabeçalho, CRLF e floats com repr."""
        rows = np.array([[0.1, 2.0], [1e-20, -3.5]])

        path = ReportWriter(str(tmp_path)).write_csv("s.csv", ["x", "y"], rows)

        assert path.read_bytes().decode("utf-8") == "x,y\r\n0.1,2.0\r\n1e-20,-3.5\r\n"
