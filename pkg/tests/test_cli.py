"""
Testes para a interface de linha de comando.
"""
import json
from unittest.mock import Mock, patch

import pytest

from app.cli import DEFAULT_DOMAIN, _split_out, build_parser, load_config, main
from app.core.exceptions import ConfigInvalid, RuntimeBudgetExceeded
from app.domain.models import CheckResult, Report


def _parse(*argv):
    return build_parser().parse_args(list(argv))


def _report(passed: bool) -> Report:
    check = CheckResult("cover.inclusion", 1.0, None, 1.0, passed)
    return Report("0123456789abcdef", {}, 7, "1.0.0", [check])


class TestLoadConfig:
    """Testes para a montagem da configuração."""

    def test_split_out(self):
        """--out aceita diretório ou arquivo .json."""
        assert _split_out(None) == (None, None)
        assert _split_out("runs/a") == ("runs/a", None)
        assert _split_out("runs/a/report.json") == ("runs/a", "report.json")

    def test_defaults(self):
        """Sem arquivo: domínio padrão e todos os módulos."""
        config, name = load_config(_parse("run"))

        assert config.domain.kind == DEFAULT_DOMAIN
        assert name is None

    def test_overrides(self, tmp_path):
        """Opções substituem o arquivo; domínio curto é expandido."""
        # Arrange
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"domain": {"kind": "analytic-ball"}, "seed": 1}))

        # Act
        config, name = load_config(_parse(
            "cover-verify", "--config", str(path), "--domain", "slab", "--seed", "9",
            "--eps", "0.2", "--ladder", "2", "--n", "500", "--out", str(tmp_path / "r.json"),
        ))

        # Assert
        assert config.domain.kind == "flat-slab"
        assert config.seed == 9
        assert config.modules == ["cover"]
        assert config.ladders.eps == [0.2, 0.1]
        assert config.budgets.cover == 500
        assert config.output_dir == str(tmp_path)
        assert name == "r.json"

    def test_transport_options(self):
        """transport-run seleciona o módulo de cenário."""
        config, _ = load_config(_parse("transport-run", "--scenario", "green", "--t", "0.25", "--depth", "2"))

        assert config.modules == ["scenario"]
        assert config.transport.scenario == "green"
        assert config.transport.t == 0.25
        assert config.transport.depth == 2

    def test_unknown_domain(self):
        with pytest.raises(ConfigInvalid):
            load_config(_parse("run", "--domain", "torus"))

    def test_invalid_ladder(self):
        with pytest.raises(ConfigInvalid):
            load_config(_parse("cutoff-verify", "--eps", "0.1", "--ladder", "0"))


class TestMain:
    """Testes para os códigos de saída."""

    def test_missing_config_file(self, tmp_path):
        """Configuração inválida sai com 64."""
        assert main(["run", "--config", str(tmp_path / "missing.json")]) == 64

    @pytest.mark.parametrize("passed,code", [(True, 0), (False, 2)])
    def test_suite_exit_code(self, passed, code, capsys):
        """0 quando tudo passa, 2 com alguma reprovação."""
        use_case = Mock()
        use_case.execute.return_value = _report(passed)

        with patch("app.cli.dependencies.get_run_suite_use_case", return_value=use_case):
            assert main(["cover-verify", "--domain", "slab"]) == code

        assert f'"passed": {json.dumps(passed)}' in capsys.readouterr().out

    def test_budget_exit_code(self):
        """Orçamento esgotado sai com 3."""
        use_case = Mock()
        use_case.execute.side_effect = RuntimeBudgetExceeded("acabou")

        with patch("app.cli.dependencies.get_run_suite_use_case", return_value=use_case):
            assert main(["run", "--domain", "ball"]) == 3

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])
