"""
Configurações da aplicação.
"""
from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Configurações da aplicação usando Pydantic Settings."""

    # Database Configuration
    database_url: str = Field(
        default="sqlite:///./kinlab_reports.db",
        env="DATABASE_URL",
        description="URL de conexão com o banco de relatórios"
    )

    # Output Configuration
    output_dir: str = Field(
        default="./kinlab_out",
        env="OUTPUT_DIR",
        description="Diretório padrão para relatórios JSON e amostras CSV"
    )

    # Run Configuration
    default_seed: int = Field(
        default=20240101,
        env="DEFAULT_SEED",
        description="Semente usada quando a configuração não informa uma"
    )

    threads: int = Field(
        default=1,
        env="THREADS",
        description="Número de workers para lotes de amostras"
    )

    budget_seconds: float = Field(
        default=900.0,
        env="BUDGET_SECONDS",
        description="Orçamento de tempo de parede para uma suíte completa"
    )

    rng_chunk: int = Field(
        default=4096,
        env="RNG_CHUNK",
        description="Tamanho do bloco de amostras por fluxo aleatório"
    )

    # Geometry tolerances (relativas ao diâmetro)
    tol_b: float = Field(default=1e-9, env="TOL_B", description="Tolerância de proximidade da fronteira")
    tol_hit: float = Field(default=1e-9, env="TOL_HIT", description="Tolerância do ponto de saída")
    tol_g: float = Field(default=1e-8, env="TOL_G", description="Tolerância relativa de rasância")
    tol_nd: float = Field(default=1e-3, env="TOL_ND", description="Limiar de não-degenerescência")
    tol_t: float = Field(default=1e-4, env="TOL_T", description="Distância mínima a t = t_b")

    delta_min: float = Field(
        default=1e-4,
        env="DELTA_MIN",
        description="Menor escala de carta aceita antes de DegenerateBoundary"
    )

    chart_grid: int = Field(
        default=64,
        env="CHART_GRID",
        description="Lado da grade usada para verificar inclinação e curvatura por carta"
    )

    max_march_steps: int = Field(
        default=1_000_000,
        env="MAX_MARCH_STEPS",
        description="Máximo de passos de marcha por raio"
    )

    # Cover Configuration
    c_star: float = Field(default=10.0, env="C_STAR", description="Constante C_* do recobrimento")
    s_star: float = Field(default=10.0, env="S_STAR", description="Constante s_* do lema do cone")
    theta_w: float = Field(default=0.125, env="THETA_W", description="Peso gaussiano θ")
    v_max: float = Field(default=6.0, env="V_MAX", description="Truncamento de velocidade")
    c_tilde_factor: float = Field(
        default=100.0,
        env="C_TILDE_FACTOR",
        description="C̃ = fator · C_* para o raio do molificador"
    )
    mc_n: int = Field(
        default=4096,
        env="MC_N",
        description="Amostras de Monte Carlo por convolução"
    )
    k_cut: int = Field(
        default=100,
        env="K_CUT",
        description="Truncamento k da mudança de variáveis"
    )

    # Logging Configuration
    log_level: str = Field(
        default="INFO",
        env="LOG_LEVEL",
        description="Nível de log (DEBUG, INFO, WARNING, ERROR, CRITICAL)"
    )

    # API Configuration
    api_title: str = Field(
        default="Kinlab API",
        env="API_TITLE",
        description="Título da API"
    )

    api_description: str = Field(
        default="Verificação numérica de geometria cinética: tempos de saída, conjunto singular, recobrimentos e transporte",
        env="API_DESCRIPTION",
        description="Descrição da API"
    )

    api_version: str = Field(
        default="1.0.0",
        env="API_VERSION",
        description="Versão da API"
    )

    allowed_origins: str = Field(
        default='["http://localhost:3000", "http://localhost:8080"]',
        env="ALLOWED_ORIGINS",
        description="Origens permitidas para CORS (JSON string)"
    )

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False

    @property
    def all_allowed_origins(self) -> list[str]:
        """Retorna as origens permitidas para CORS."""
        import json
        try:
            return list(json.loads(self.allowed_origins))
        except (json.JSONDecodeError, TypeError):
            return ["http://localhost:3000", "http://localhost:8080"]


# Instância global das configurações
settings = Settings()
