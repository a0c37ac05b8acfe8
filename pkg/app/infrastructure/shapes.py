"""
Galeria de domínios: bola, "puck" com covinha gaussiana e placa periódica.
"""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from app.core.exceptions import ConfigInvalid
from app.domain.interfaces import IShape

logger = logging.getLogger(__name__)


def cube_sphere_directions(k: int) -> np.ndarray:
    """Direções unitárias de uma grade k×k em cada face do cubo, projetadas na esfera."""
    a = (np.arange(k) + 0.5) / k * 2.0 - 1.0
    g1, g2 = np.meshgrid(a, a, indexing="ij")
    g1 = g1.ravel()
    g2 = g2.ravel()
    ones = np.ones_like(g1)
    faces = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            pts = np.empty((len(g1), 3))
            others = [i for i in range(3) if i != axis]
            pts[:, axis] = sign * ones
            pts[:, others[0]] = g1
            pts[:, others[1]] = g2
            faces.append(pts)
    d = np.concatenate(faces)
    return d / np.linalg.norm(d, axis=1)[:, None]


class _StarShape(IShape):
    """Base para formas estreladas em relação a `center`."""

    center: np.ndarray

    def radial_projection(self, dirs: np.ndarray, iters: int = 80) -> np.ndarray:
        """Primeiro cruzamento de ∂Ω ao longo de raios a partir do centro."""
        step = self.diam / 200.0
        lo = np.zeros(len(dirs))
        hi = np.full(len(dirs), np.nan)
        active = np.ones(len(dirs), dtype=bool)
        t = np.zeros(len(dirs))
        for _ in range(600):
            if not active.any():
                break
            t[active] += step
            out = self.phi(self.center + t[:, None] * dirs) >= 0
            hit = active & out
            hi[hit] = t[hit]
            lo[active & ~out] = t[active & ~out]
            active &= ~out
        hi = np.where(np.isnan(hi), t, hi)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            out = self.phi(self.center + mid[:, None] * dirs) >= 0
            hi = np.where(out, mid, hi)
            lo = np.where(out, lo, mid)
        return self.center + hi[:, None] * dirs

    def chart_seeds(self, spacing: float) -> np.ndarray:
        lo, hi = self.bounding_box()
        extent = float(np.max(hi - lo))
        k = max(1, int(np.ceil(extent / spacing)))
        return self.radial_projection(cube_sphere_directions(k))


class BallShape(_StarShape):
    """Bola de raio R: F = (|x − c|² − R²)/(2R)."""

    kind = "analytic-ball"
    has_nonconvex_points = False

    def __init__(self, radius: float = 1.0, center: Optional[np.ndarray] = None):
        if radius <= 0:
            raise ConfigInvalid(f"radius deve ser positivo (recebido {radius})")
        self.radius = float(radius)
        self.center = np.zeros(3) if center is None else np.asarray(center, dtype=float)

    def phi(self, x: np.ndarray) -> np.ndarray:
        d = np.atleast_2d(x) - self.center
        return ((d ** 2).sum(axis=1) - self.radius ** 2) / (2.0 * self.radius)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(x) - self.center) / self.radius

    def hessian(self, x: np.ndarray) -> np.ndarray:
        n = len(np.atleast_2d(x))
        return np.broadcast_to(np.eye(3) / self.radius, (n, 3, 3)).copy()

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.center - self.radius, self.center + self.radius

    def chart_seeds(self, spacing: float) -> np.ndarray:
        k = max(1, int(np.ceil(2.0 * self.radius / spacing)))
        return self.center + self.radius * cube_sphere_directions(k)

    def volume(self) -> float:
        return 4.0 / 3.0 * np.pi * self.radius ** 3

    def analytic_exit(self, x: np.ndarray, d: np.ndarray) -> np.ndarray:
        rel = np.atleast_2d(x) - self.center
        b = (rel * d).sum(axis=1)
        c = (rel ** 2).sum(axis=1) - self.radius ** 2
        disc = np.maximum(b ** 2 - c, 0.0)
        return np.maximum(-b + np.sqrt(disc), 0.0)


class SlabShape(IShape):
    """
    Placa {−H < x₃ < H} com x₁, x₂ periódicos de período 2L.

    F = (x₃² − H²)/(2H); todas as cartas são planas.
    """

    kind = "flat-slab"
    has_nonconvex_points = False

    def __init__(self, half_height: float = 0.5, half_period: float = 1.0):
        if half_height <= 0 or half_period <= 0:
            raise ConfigInvalid("half_height e half_period devem ser positivos")
        self.half_height = float(half_height)
        self.half_period = float(half_period)
        self.center = np.zeros(3)

    def phi(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return (x[:, 2] ** 2 - self.half_height ** 2) / (2.0 * self.half_height)

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        g = np.zeros_like(x, dtype=float)
        g[:, 2] = x[:, 2] / self.half_height
        return g

    def hessian(self, x: np.ndarray) -> np.ndarray:
        h = np.zeros((len(np.atleast_2d(x)), 3, 3))
        h[:, 2, 2] = 1.0 / self.half_height
        return h

    @property
    def diam(self) -> float:
        return float(np.sqrt(8.0 * self.half_period ** 2 + 4.0 * self.half_height ** 2))

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.array([-self.half_period, -self.half_period, -self.half_height])
        return lo, -lo

    def volume(self) -> float:
        return 8.0 * self.half_period ** 2 * self.half_height

    def wrap(self, d: np.ndarray) -> np.ndarray:
        d = np.array(d, dtype=float, copy=True)
        period = 2.0 * self.half_period
        d[..., :2] -= period * np.round(d[..., :2] / period)
        return d

    def periodic_shifts(self) -> np.ndarray:
        period = 2.0 * self.half_period
        return np.array([[i * period, j * period, 0.0] for i in (-1, 0, 1) for j in (-1, 0, 1)])

    def chart_seeds(self, spacing: float) -> np.ndarray:
        k = max(1, int(np.ceil(2.0 * self.half_period / spacing)))
        a = -self.half_period + (np.arange(k) + 0.5) * (2.0 * self.half_period / k)
        g1, g2 = np.meshgrid(a, a, indexing="ij")
        top = np.column_stack([g1.ravel(), g2.ravel(), np.full(g1.size, self.half_height)])
        bottom = top.copy()
        bottom[:, 2] = -self.half_height
        return np.concatenate([top, bottom])

    def analytic_exit(self, x: np.ndarray, d: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        d3 = d[:, 2]
        out = np.full(len(x), np.inf)
        up = d3 > 0
        down = d3 < 0
        out[up] = (self.half_height - x[up, 2]) / d3[up]
        out[down] = (-self.half_height - x[down, 2]) / d3[down]
        on_plane = (d3 == 0) & (np.abs(np.abs(x[:, 2]) - self.half_height) <= 1e-12 * self.diam)
        out[on_plane] = 0.0
        return np.maximum(out, 0.0)


class BumpShape(_StarShape):
    """
    "Puck" cujo fundo é exatamente o gráfico x₃ = η(x₁, x₂), η = −h·exp(−r²/w²).

    F = η(r) + q(r) − x₃ + p(x₃), com q(r) = (r − r₀)₊³/(3s²) e
    p(z) = (z − z₀)₊³/(3s²); Ω = {F < 0} coincide com {x₃ > η} para r ≤ r₀, x₃ ≤ z₀.
    """

    kind = "graph-bump"

    def __init__(self, h: float = 0.5, w: float = 1.0, r0: float = 1.25, z0: float = 0.1, cap: float = 0.75):
        if w <= 0 or cap <= 0 or r0 <= 0:
            raise ConfigInvalid("w, r0 e cap devem ser positivos")
        self.h = float(h)
        self.w = float(w)
        self.r0 = float(r0)
        self.z0 = float(z0)
        self.cap = float(cap)
        self.center = np.array([0.0, 0.0, self.z0])
        s2 = 3.0 * self.cap ** 2
        roots = np.roots([-1.0 / s2, 0.0, 1.0, self.h + self.z0])
        real = roots[np.abs(roots.imag) < 1e-9].real
        self._z_top = self.z0 + float(real.max())
        ceiling = self.z0 + 2.0 * self.cap / 3.0 + max(self.h, 0.0)
        self._r_lat = self.r0 + float(np.cbrt(s2 * ceiling))

    def _radial(self, x: np.ndarray):
        x = np.atleast_2d(x)
        r = np.sqrt(x[:, 0] ** 2 + x[:, 1] ** 2)
        e = np.exp(-(r ** 2) / self.w ** 2)
        rr = np.maximum(r - self.r0, 0.0)
        s2 = self.cap ** 2
        zz = np.maximum(x[:, 2] - self.z0, 0.0)
        return x, r, e, rr, s2, zz

    def phi(self, x: np.ndarray) -> np.ndarray:
        x, r, e, rr, s2, zz = self._radial(x)
        return -self.h * e + rr ** 3 / (3.0 * s2) - x[:, 2] + zz ** 3 / (3.0 * s2)

    def grad(self, x: np.ndarray) -> np.ndarray:
        x, r, e, rr, s2, zz = self._radial(x)
        coef = (2.0 * self.h / self.w ** 2) * e
        with np.errstate(divide="ignore", invalid="ignore"):
            q_over_r = np.where(r > 0, (rr ** 2 / s2) / r, 0.0)
        g = np.empty_like(x, dtype=float)
        g[:, 0] = (coef + q_over_r) * x[:, 0]
        g[:, 1] = (coef + q_over_r) * x[:, 1]
        g[:, 2] = -1.0 + zz ** 2 / s2
        return g

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x, r, e, rr, s2, zz = self._radial(x)
        n = len(x)
        xy = x[:, :2]
        outer = np.einsum("ni,nj->nij", xy, xy)
        eye = np.broadcast_to(np.eye(2), (n, 2, 2))
        h_eta = (2.0 * self.h / self.w ** 2) * e[:, None, None] * (eye - 2.0 * outer / self.w ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            safe_r = np.where(r > 0, r, 1.0)
            rhat = outer / safe_r[:, None, None] ** 2
        q1 = rr ** 2 / s2
        q2 = 2.0 * rr / s2
        h_q = q2[:, None, None] * rhat + (q1 / safe_r)[:, None, None] * (eye - rhat)
        h_q = np.where((rr > 0)[:, None, None], h_q, 0.0)
        out = np.zeros((n, 3, 3))
        out[:, :2, :2] = h_eta + h_q
        out[:, 2, 2] = 2.0 * zz / s2
        return out

    @property
    def diam(self) -> float:
        return float(np.sqrt((2.0 * self._r_lat) ** 2 + (self._z_top + self.h) ** 2))

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.array([-self._r_lat, -self._r_lat, -self.h - 1e-9])
        hi = np.array([self._r_lat, self._r_lat, self._z_top + 1e-9])
        return lo, hi


GALLERY_ALIASES = {
    "ball": "analytic-ball",
    "analytic-ball": "analytic-ball",
    "bump": "graph-bump",
    "graph-bump": "graph-bump",
    "slab": "flat-slab",
    "flat-slab": "flat-slab",
}


def build_shape(kind: str, params: Dict[str, Any] | None = None) -> IShape:
    """
    Constrói uma forma da galeria pelo nome.

    Args:
        kind: ball | bump | slab (ou os nomes longos)
        params: radius; h, w, L (raio lateral exato), z0, cap; height, L

    Raises:
        ConfigInvalid: Se o nome ou os parâmetros forem inválidos
    """
    params = dict(params or {})
    canonical = GALLERY_ALIASES.get(kind)
    if canonical is None:
        raise ConfigInvalid(f"Domínio desconhecido: {kind}")
    if canonical == "analytic-ball":
        return BallShape(radius=float(params.get("radius", 1.0)))
    if canonical == "graph-bump":
        return BumpShape(
            h=float(params.get("h", 0.5)),
            w=float(params.get("w", 1.0)),
            r0=float(params.get("L", 1.25)),
            z0=float(params.get("z0", 0.1)),
            cap=float(params.get("cap", 0.75)),
        )
    return SlabShape(
        half_height=float(params.get("height", 0.5)),
        half_period=float(params.get("L", 1.0)),
    )
