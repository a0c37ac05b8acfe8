"""
Modelos do domínio: domínio, pontos de fase, registros de saída e parâmetros.
"""
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from app.core.exceptions import GeometryError
from app.domain.charts import BoundaryChart
from app.domain.interfaces import IShape


class Location(IntEnum):
    """Classificação de um ponto em relação a Ω."""
    INTERIOR = -1
    BOUNDARY = 0
    EXTERIOR = 1


@dataclass
class Domain:
    """
    Domínio limitado Ω com fronteira C² descrita por cartas.

    Imutável após a construção; compartilhável entre workers.
    """
    shape: Optional[IShape]
    charts: Tuple[BoundaryChart, ...]
    delta: float
    c_eta: float
    kind: str
    name: str = ""
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def diam(self) -> float:
        if self.shape is None:
            return float(4.0 * self.delta)
        return float(self.shape.diam)

    @property
    def implicit_shape(self) -> IShape:
        """
        Forma implícita F do domínio.

        Raises:
            GeometryError: Se o domínio for formado só por cartas analíticas
        """
        if self.shape is None:
            raise GeometryError(f"Domínio '{self.kind}' sem forma implícita: a consulta exige F")
        return self.shape

    def classify(self, x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Classifica pontos (n, 3) como interior, fronteira ou exterior."""
        x = np.atleast_2d(x)
        shape = self.implicit_shape
        f = shape.phi(x)
        g = np.linalg.norm(shape.grad(x), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.where(g > 0, np.abs(f) / g, np.abs(f))
        out = np.where(f < 0, int(Location.INTERIOR), int(Location.EXTERIOR))
        return np.where(dist <= tol * self.diam, int(Location.BOUNDARY), out)

    def inside(self, x: np.ndarray) -> np.ndarray:
        """Predicado de Ω aberto."""
        return self.implicit_shape.phi(np.atleast_2d(x)) < 0

    @cached_property
    def _origin_index(self) -> Tuple[cKDTree, np.ndarray, np.ndarray]:
        origins = np.array([c.origin for c in self.charts])
        shifts = self.shape.periodic_shifts() if self.shape is not None else np.zeros((1, 3))
        pts = np.concatenate([origins + s for s in shifts])
        ids = np.tile(np.arange(len(self.charts)), len(shifts))
        return cKDTree(pts), ids, origins

    def _candidates(self, x: np.ndarray, k: int):
        tree, ids, _ = self._origin_index
        k = min(k, tree.n)
        _, idx = tree.query(x, k=k)
        idx = np.asarray(idx).reshape(len(x), k)
        return ids[idx]

    def locate(self, x: np.ndarray, k: int = 8) -> Tuple[np.ndarray, np.ndarray]:
        """
        Carta mais central que cobre cada ponto de fronteira.

        Returns:
            (chart_ids (n,), xi (n, 2)); chart_id = −1 quando nenhuma carta cobre
        """
        x = np.atleast_2d(x)
        cand = self._candidates(x, k)
        best_id = np.full(len(x), -1, dtype=int)
        best_xi = np.full((len(x), 2), np.nan)
        best_score = np.full(len(x), np.inf)
        for col in range(cand.shape[1]):
            for cid in np.unique(cand[:, col]):
                rows = np.nonzero(cand[:, col] == cid)[0]
                chart = self.charts[cid]
                xi, zeta = chart.to_local(x[rows])
                score = np.max(np.abs(xi), axis=1)
                ok = (score < chart.half) & (np.abs(zeta) < chart.half) & (score < best_score[rows])
                sel = rows[ok]
                best_id[sel] = cid
                best_xi[sel] = xi[ok]
                best_score[sel] = score[ok]
        return best_id, best_xi

    def multiplicity(self, x: np.ndarray, k: int = 24) -> np.ndarray:
        """Número de cartas cujo retângulo contém cada ponto de fronteira."""
        x = np.atleast_2d(x)
        cand = self._candidates(x, k)
        count = np.zeros(len(x), dtype=int)
        for col in range(cand.shape[1]):
            seen = np.zeros(len(x), dtype=bool)
            for prev in range(col):
                seen |= cand[:, prev] == cand[:, col]
            for cid in np.unique(cand[:, col]):
                rows = np.nonzero((cand[:, col] == cid) & ~seen)[0]
                if len(rows) == 0:
                    continue
                chart = self.charts[cid]
                xi, zeta = chart.to_local(x[rows])
                ok = (np.max(np.abs(xi), axis=1) < chart.half) & (np.abs(zeta) < chart.half)
                count[rows[ok]] += 1
        return count


@dataclass(frozen=True)
class PhasePoint:
    """Ponto (x, v) do espaço de fase Ω̄ × ℝ³."""
    x: np.ndarray
    v: np.ndarray

    @classmethod
    def of(cls, x: Sequence[float], v: Sequence[float]) -> "PhasePoint":
        return cls(np.asarray(x, dtype=float), np.asarray(v, dtype=float))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.v])


@dataclass(frozen=True)
class ExitRecord:
    """Resultado de um traçado para trás (t_b, x_b) ou para frente (t_f, x_f)."""
    t_exit: float
    x_exit: Optional[np.ndarray]
    n_exit: Optional[np.ndarray]
    speed_normal: float
    chart_id: int
    grazing: bool
    on_boundary_start: bool = False

    @property
    def hits(self) -> bool:
        return bool(np.isfinite(self.t_exit))


@dataclass
class ExitBatch:
    """Traçados vetorizados; linhas com t = +inf não atingem a fronteira."""
    t: np.ndarray
    x_exit: np.ndarray
    normal: np.ndarray
    speed_normal: np.ndarray
    chart_id: np.ndarray
    grazing: np.ndarray
    on_boundary_start: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def record(self, i: int) -> ExitRecord:
        hits = np.isfinite(self.t[i])
        return ExitRecord(
            t_exit=float(self.t[i]),
            x_exit=self.x_exit[i].copy() if hits else None,
            n_exit=self.normal[i].copy() if hits else None,
            speed_normal=float(self.speed_normal[i]),
            chart_id=int(self.chart_id[i]),
            grazing=bool(self.grazing[i]),
            on_boundary_start=bool(self.on_boundary_start[i]),
        )


@dataclass(frozen=True)
class SingularPatchParams:
    """Parâmetros (carta, x₁, x₂, θ, r_v, s) de um ponto do conjunto singular."""
    chart_id: int
    x1: float
    x2: float
    theta: float
    r_v: float
    s: float


@dataclass
class SingularSampleSet:
    """Amostras de 𝔖_B com os parâmetros de lançamento e resíduos de rasância."""
    x: np.ndarray
    v: np.ndarray
    chart_id: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    r_v: np.ndarray
    s: np.ndarray
    residual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    failed: int = 0

    def __len__(self) -> int:
        return len(self.x)

    @property
    def phase(self) -> np.ndarray:
        return np.hstack([self.x, self.v])

    def head(self, n: int) -> "SingularSampleSet":
        """As primeiras n amostras."""
        return SingularSampleSet(
            x=self.x[:n], v=self.v[:n], chart_id=self.chart_id[:n], xi=self.xi[:n], theta=self.theta[:n],
            r_v=self.r_v[:n], s=self.s[:n], residual=self.residual[:n], failed=self.failed,
        )

    def params(self, i: int) -> SingularPatchParams:
        return SingularPatchParams(
            chart_id=int(self.chart_id[i]),
            x1=float(self.xi[i, 0]),
            x2=float(self.xi[i, 1]),
            theta=float(self.theta[i]),
            r_v=float(self.r_v[i]),
            s=float(self.s[i]),
        )


@dataclass(frozen=True)
class CoverParams:
    """Constantes do recobrimento 𝒪_{ε,ε₁}."""
    eps: float
    eps1: float
    delta: float
    c_eta: float
    c_star: float = 10.0
    s_star: float = 10.0
    theta_w: float = 0.125
    v_max: float = 6.0

    def __post_init__(self):
        if not (0 < self.eps <= self.eps1):
            raise ValueError(f"Exige 0 < eps <= eps1 (eps={self.eps}, eps1={self.eps1})")
        if self.c_star < 10:
            raise ValueError(f"c_star deve ser >= 10 (recebido {self.c_star})")
        if not (0 < self.theta_w < 0.25):
            raise ValueError(f"theta_w deve estar em (0, 1/4) (recebido {self.theta_w})")


@dataclass
class CheckResult:
    """Resultado de uma verificação do relatório."""
    name: str
    estimate: Any
    std_error: Optional[float]
    threshold: Any
    passed: bool
    wall_time: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "threshold": self.threshold,
            "passed": bool(self.passed),
            "wall_time": self.wall_time,
            "details": self.details,
        }


@dataclass
class Report:
    """Relatório de uma execução da suíte."""
    run_id: str
    config: Dict[str, Any]
    seed: int
    version: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "seed": self.seed,
            "version": self.version,
            "config": self.config,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }
