"""
Testes para o validador de configuração.
"""
import pytest

from app.application.dtos import ExperimentConfig
from app.application.validators import ConfigValidator
from app.core.exceptions import ConfigInvalid


def _config(kind: str, **params) -> ExperimentConfig:
    return ExperimentConfig(domain={"kind": kind, "params": params}, modules=["geometry"])


class TestDomainParams:
    """Testes para validate_domain_params."""

    def test_known_params(self):
        """Parâmetros do bump aceitos, inclusive h = 0."""
        ConfigValidator.validate_domain_params(_config("graph-bump", h=0.0, w=0.3))

    def test_unknown_param(self):
        """Parâmetro de outro domínio é rejeitado."""
        with pytest.raises(ConfigInvalid, match="radius"):
            ConfigValidator.validate_domain_params(_config("flat-slab", radius=1.0))

    def test_non_positive_param(self):
        """Raio zero é rejeitado."""
        with pytest.raises(ConfigInvalid):
            ConfigValidator.validate_domain_params(_config("analytic-ball", radius=0.0))


class TestScenario:
    """Testes para validate_scenario."""

    def test_known(self):
        assert ConfigValidator.validate_scenario("green") == "green"

    def test_unknown(self):
        with pytest.raises(ConfigInvalid):
            ConfigValidator.validate_scenario("boltzmann")

    def test_validate_checks_scenario(self):
        """validate cobre o cenário de transporte."""
        config = ExperimentConfig(domain={"kind": "analytic-ball"}, modules=["geometry"], transport={"scenario": "nope"})

        with pytest.raises(ConfigInvalid):
            ConfigValidator.validate(config)


class TestPaths:
    """Testes para safe_output_dir e validate_run_id."""

    def test_output_dir_inside_root(self, tmp_path):
        """Subdiretório relativo fica dentro da raiz."""
        assert ConfigValidator.safe_output_dir("run1", str(tmp_path)) == (tmp_path / "run1").resolve()
        assert ConfigValidator.safe_output_dir(None, str(tmp_path)) == tmp_path.resolve()

    def test_output_dir_escape(self, tmp_path):
        """Caminho que sobe da raiz é rejeitado."""
        with pytest.raises(ConfigInvalid):
            ConfigValidator.safe_output_dir("../outside", str(tmp_path))

    @pytest.mark.parametrize("run_id", ["", "ABCDEF", "../etc", "g123", "a" * 65])
    def test_invalid_run_id(self, run_id):
        """Apenas hexadecimal minúsculo com até 64 caracteres."""
        with pytest.raises(ConfigInvalid):
            ConfigValidator.validate_run_id(run_id)

    def test_valid_run_id(self):
        assert ConfigValidator.validate_run_id(" 0123abcd ") == "0123abcd"
