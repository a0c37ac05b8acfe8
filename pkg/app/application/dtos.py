"""
Data Transfer Objects (DTOs) para a aplicação.
"""
import hashlib
import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator

from app.core.exceptions import ConfigInvalid
from app.core.settings import settings

DomainKind = Literal["analytic-ball", "graph-bump", "flat-slab"]
ModuleName = Literal["geometry", "raytrace", "singular", "cover", "cutoff", "measure", "transport", "scenario"]

# "scenario" roda apenas as verificações do cenário em transport.scenario
ALL_MODULES: List[str] = ["geometry", "raytrace", "singular", "cover", "cutoff", "measure", "transport"]


def _strictly_monotone(values: List[float]) -> bool:
    pairs = list(zip(values, values[1:]))
    return all(b > a for a, b in pairs) or all(b < a for a, b in pairs)


class DomainSpec(BaseModel):
    """Domínio da galeria e parâmetros da forma."""

    kind: DomainKind = Field(..., description="Tipo de domínio da galeria")
    params: Dict[str, float] = Field(default_factory=dict, description="Parâmetros da forma (radius, h, w, L, ...)")
    delta: Optional[float] = Field(None, gt=0, description="Escala das cartas; None escolhe pela regra de inclinação")
    chart_grid: Optional[int] = Field(None, ge=4, description="Lado da grade de verificação das cartas")


class Ladders(BaseModel):
    """Escadas numéricas; cada uma deve ser estritamente monótona."""

    eps: List[float] = Field(default_factory=lambda: [0.04, 0.02, 0.01], min_length=1)
    delta: List[float] = Field(default_factory=lambda: [0.5, 0.25, 0.125], min_length=1)
    h: List[float] = Field(default_factory=lambda: [4e-2, 2e-2, 1e-2], min_length=1)
    depth: List[int] = Field(default_factory=lambda: [3, 4, 5, 6], min_length=1)

    @field_validator("eps", "delta", "h")
    @classmethod
    def validate_positive_monotone(cls, v):
        """Valida escada positiva e estritamente monótona."""
        if any(x <= 0 for x in v):
            raise ValueError("valores da escada devem ser positivos")
        if not _strictly_monotone(v):
            raise ValueError("escada deve ser estritamente monótona")
        return v

    @field_validator("depth")
    @classmethod
    def validate_depth(cls, v):
        """Valida profundidades não negativas e estritamente monótonas."""
        if any(d < 0 for d in v):
            raise ValueError("profundidades devem ser >= 0")
        if not _strictly_monotone(v):
            raise ValueError("escada deve ser estritamente monótona")
        return v


class Budgets(BaseModel):
    """Orçamentos de amostras por verificação."""

    rays: int = Field(1000, gt=0, description="Raios para derivadas e oráculo")
    singular: int = Field(2000, gt=0, description="Amostras de 𝔖_B")
    cover: int = Field(20_000, gt=0, description="Amostras de Monte Carlo do recobrimento")
    cutoff: int = Field(2000, gt=0, description="Pontos de avaliação do corte")
    measure: int = Field(20_000, gt=0, description="Amostras das mudanças de variáveis")
    transport_points: int = Field(200, gt=0, description="Pontos de avaliação do transporte")
    transport_paths: int = Field(64, gt=0, description="Caminhos por ponto no modo difuso")


class TransportOptions(BaseModel):
    """Opções do módulo de transporte."""

    scenario: str = Field("maxwellian-check", description="Cenário da galeria")
    t: float = Field(0.5, gt=0, description="Tempo de avaliação")
    depth: int = Field(5, ge=0, description="Profundidade do modo difuso")
    grid_points: int = Field(5, ge=3, description="Nós por eixo da grade de variação total")


class ExperimentConfig(BaseModel):
    """Configuração de uma execução da suíte."""

    domain: DomainSpec
    modules: List[ModuleName] = Field(default_factory=lambda: list(ALL_MODULES), description="Módulos selecionados")
    ladders: Ladders = Field(default_factory=Ladders)
    budgets: Budgets = Field(default_factory=Budgets)
    transport: TransportOptions = Field(default_factory=TransportOptions)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0)
    threads: int = Field(default_factory=lambda: settings.threads, ge=1)
    budget_seconds: float = Field(default_factory=lambda: settings.budget_seconds, gt=0)
    output_dir: Optional[str] = Field(None, description="Diretório de saída")

    @field_validator("modules")
    @classmethod
    def validate_modules(cls, v):
        """Valida seletor não vazio e sem repetições."""
        if not v:
            raise ValueError("o seletor de módulos não pode ser vazio")
        if len(set(v)) != len(v):
            raise ValueError("módulos repetidos no seletor")
        return v

    def echo(self) -> Dict[str, Any]:
        """Eco canônico da configuração (sem campos de execução)."""
        return self.model_dump(mode="json", exclude={"threads", "output_dir", "budget_seconds"})

    def config_hash(self) -> str:
        """SHA-256 do eco canônico; independe de threads e diretório de saída."""
        canonical = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @classmethod
    def parse(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """
        Valida um dicionário.

        Raises:
            ConfigInvalid: Se a validação falhar
        """
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigInvalid(f"Configuração inválida: {e}") from e

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        """
        Lê e valida um arquivo JSON.

        Raises:
            ConfigInvalid: Se o arquivo não existir, não for JSON ou falhar na validação
        """
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigInvalid(f"Arquivo de configuração não encontrado: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigInvalid(f"JSON inválido em {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigInvalid("A configuração deve ser um objeto JSON")
        return cls.parse(data)


class ExperimentAccepted(BaseModel):
    """Response do início de uma execução em segundo plano."""

    task_id: str = Field(..., description="ID da tarefa")
    status: str = Field(..., description="Status inicial")
    config_hash: str = Field(..., description="Hash da configuração")


class CheckResultDTO(BaseModel):
    """Resultado serializado de uma verificação."""

    name: str
    estimate: Any
    std_error: Any = None
    threshold: Any = None
    passed: bool
    wall_time: float = 0.0
    details: Dict[str, Any] = Field(default_factory=dict)


class ReportResponse(BaseModel):
    """Response com um relatório persistido."""

    run_id: str = Field(..., description="ID da execução")
    seed: int = Field(..., description="Semente da execução")
    version: str = Field(..., description="Versão do código")
    passed: bool = Field(..., description="Todas as verificações passaram")
    config: Dict[str, Any] = Field(..., description="Eco da configuração")
    checks: List[CheckResultDTO] = Field(..., description="Verificações")
    persisted_at: Optional[datetime] = Field(None, description="Data/hora de persistência")


class GeometryInfoResponse(BaseModel):
    """Resumo geométrico de um domínio da galeria."""

    kind: str
    chart_count: int
    delta: float
    c_eta: float
    diam: float
    volume: float
    volume_std_error: float
    surface_area: float
    surface_area_std_error: float
    convexity: Dict[str, float]
