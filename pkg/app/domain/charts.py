"""
Cartas de fronteira: ∂Ω localmente como gráfico ζ = η(ξ₁, ξ₂).

Coordenadas da carta: mundo = origem + ξ₁e₁ + ξ₂e₂ + ζe₃ com e₃ apontando
para dentro de Ω, de modo que o interior é {ζ > η}. A normal exterior em
coordenadas da carta é (∂₁η, ∂₂η, −1)/√(1+|∇η|²).
"""
from abc import ABC, abstractmethod
from typing import Callable, Optional, Tuple

import numpy as np

from app.domain.interfaces import IShape


def frame_from_normal(n: np.ndarray) -> np.ndarray:
    """
    Triedro ortonormal (colunas e₁, e₂, e₃) com e₃ = −n.

    e₁ vem do eixo coordenado menos alinhado com n.
    """
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    e3 = -n
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(n)))] = 1.0
    e1 = axis - np.dot(axis, e3) * e3
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return np.column_stack([e1, e2, e3])


def tangent_basis_local(grad_eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vetores τ₁, τ₂ (coordenadas da carta) para ∇η dado, shape (n, 3) cada.

    τ₁ = (1, 0, η₁)/T e τ₂ = (−η₁η₂, 1+η₁², η₂)/(S·T), S = √(1+|∇η|²), T = √(1+η₁²);
    {τ₁, τ₂, n} é ortonormal.
    """
    p1 = grad_eta[:, 0]
    p2 = grad_eta[:, 1]
    s = np.sqrt(1.0 + p1 ** 2 + p2 ** 2)
    tt = np.sqrt(1.0 + p1 ** 2)
    ones = np.ones_like(p1)
    tau1 = np.stack([ones, np.zeros_like(p1), p1], axis=1) / tt[:, None]
    tau2 = np.stack([-p1 * p2, 1.0 + p1 ** 2, p2], axis=1) / (s * tt)[:, None]
    return tau1, tau2


def tangent_basis_jacobian(grad_eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Derivadas ∂τⱼ/∂p_k em relação a p = ∇η.

    Returns:
        (dtau1, dtau2), cada um (n, 3, 2): coluna k = ∂τ/∂p_k
    """
    p1 = grad_eta[:, 0]
    p2 = grad_eta[:, 1]
    s = np.sqrt(1.0 + p1 ** 2 + p2 ** 2)
    tt = np.sqrt(1.0 + p1 ** 2)
    zeros = np.zeros_like(p1)
    ones = np.ones_like(p1)

    u1 = np.stack([ones, zeros, p1], axis=1)
    d1_p1 = np.stack([zeros, zeros, ones], axis=1) / tt[:, None] - u1 * (p1 / tt ** 3)[:, None]
    d1_p2 = np.zeros_like(u1)

    u2 = np.stack([-p1 * p2, 1.0 + p1 ** 2, p2], axis=1)
    den = s * tt
    dden_p1 = p1 * tt / s + s * p1 / tt
    dden_p2 = p2 * tt / s
    du2_p1 = np.stack([-p2, 2.0 * p1, zeros], axis=1)
    du2_p2 = np.stack([-p1, zeros, ones], axis=1)
    d2_p1 = du2_p1 / den[:, None] - u2 * (dden_p1 / den ** 2)[:, None]
    d2_p2 = du2_p2 / den[:, None] - u2 * (dden_p2 / den ** 2)[:, None]

    return np.stack([d1_p1, d1_p2], axis=2), np.stack([d2_p1, d2_p2], axis=2)


def solve_graph(shape: IShape, origins: np.ndarray, frames: np.ndarray, xi: np.ndarray, iters: int = 60) -> Tuple[np.ndarray, np.ndarray]:
    """
    Resolve F(o + ξ₁e₁ + ξ₂e₂ + ζe₃) = 0 em ζ por Newton, em lote.

    Args:
        origins: (n, 3); frames: (n, 3, 3); xi: (n, 2)

    Returns:
        (pontos (n, 3), ζ (n,)); NaN onde ∂F/∂ζ se anula
    """
    e3 = frames[:, :, 2]
    base = origins + xi[:, 0:1] * frames[:, :, 0] + xi[:, 1:2] * frames[:, :, 1]
    zeta = np.zeros(len(xi))
    tol = 1e-14 * shape.diam
    for _ in range(iters):
        pts = base + zeta[:, None] * e3
        f = shape.phi(pts)
        f3 = (shape.grad(pts) * e3).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(np.abs(f3) > 1e-300, f / f3, np.nan)
        zeta = zeta - step
        if not np.all(np.isfinite(zeta)) or np.max(np.abs(step)) < tol:
            break
    return base + zeta[:, None] * e3, zeta


def implicit_derivatives(shape: IShape, pts: np.ndarray, frames: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """∇η (n, 2) e ∇²η (n, 2, 2) por diferenciação implícita de F nos pontos do gráfico."""
    g = np.einsum("na,nai->ni", shape.grad(pts), frames)
    h = np.einsum("nai,nab,nbj->nij", frames, shape.hessian(pts), frames)
    f3 = g[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        eta_i = -g[:, :2] / f3[:, None]
        hess = np.empty((len(f3), 2, 2))
        for i in range(2):
            for j in range(2):
                hess[:, i, j] = -(
                    h[:, i, j] + h[:, i, 2] * eta_i[:, j] + h[:, j, 2] * eta_i[:, i]
                    + h[:, 2, 2] * eta_i[:, i] * eta_i[:, j]
                ) / f3
    return eta_i, hess


class BoundaryChart(ABC):
    """Carta local da fronteira sobre o retângulo aberto (−δ, δ)²."""

    def __init__(self, chart_id: int, origin: np.ndarray, frame: np.ndarray, half: float):
        self.id = int(chart_id)
        self.origin = np.asarray(origin, dtype=float)
        self.frame = np.asarray(frame, dtype=float)
        self.half = float(half)
        self.c_eta: float = float("nan")

    @abstractmethod
    def eta(self, xi: np.ndarray) -> np.ndarray:
        """η(ξ), shape (n,)."""
        pass

    @abstractmethod
    def grad_eta(self, xi: np.ndarray) -> np.ndarray:
        """∇η(ξ), shape (n, 2)."""
        pass

    @abstractmethod
    def hessian_eta(self, xi: np.ndarray) -> np.ndarray:
        """∇²η(ξ), shape (n, 2, 2)."""
        pass

    def wrap(self, d: np.ndarray) -> np.ndarray:
        return d

    def to_world(self, xi: np.ndarray, zeta: np.ndarray) -> np.ndarray:
        xi = np.atleast_2d(xi)
        local = np.column_stack([xi[:, 0], xi[:, 1], np.asarray(zeta, dtype=float).reshape(-1)])
        return self.origin + local @ self.frame.T

    def to_local(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Coordenadas (ξ, ζ) de pontos do mundo."""
        d = self.wrap(np.atleast_2d(x) - self.origin)
        local = d @ self.frame
        return local[:, :2], local[:, 2]

    def graph_point(self, xi: np.ndarray) -> np.ndarray:
        xi = np.atleast_2d(xi)
        return self.to_world(xi, self.eta(xi))

    def in_patch(self, xi: np.ndarray, slack: float = 0.0) -> np.ndarray:
        return np.max(np.abs(np.atleast_2d(xi)), axis=1) < self.half * (1.0 + slack)

    def normal_local(self, xi: np.ndarray) -> np.ndarray:
        g = self.grad_eta(np.atleast_2d(xi))
        raw = np.column_stack([g[:, 0], g[:, 1], -np.ones(len(g))])
        return raw / np.linalg.norm(raw, axis=1)[:, None]

    def normal(self, xi: np.ndarray) -> np.ndarray:
        """Normal exterior em coordenadas do mundo."""
        return self.normal_local(xi) @ self.frame.T

    def tangent_frame(self, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """τ₁, τ₂ em coordenadas do mundo."""
        tau1, tau2 = tangent_basis_local(self.grad_eta(np.atleast_2d(xi)))
        return tau1 @ self.frame.T, tau2 @ self.frame.T

    def hessian_form(self, xi: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Σ uᵢuⱼ∂ᵢ∂ⱼη(ξ) nesta carta, sem realinhamento."""
        h = self.hessian_eta(np.atleast_2d(xi))
        u = np.atleast_2d(u)
        return np.einsum("ni,nij,nj->n", u, h, u)

    def curvature_bound(self, grid: int) -> Tuple[float, float]:
        """
        Máximos de |∂₁η|+|∂₂η| e |∂₁²η|+|∂₂²η|+|∂₁∂₂η| numa grade grid×grid do retângulo fechado.
        """
        a = np.linspace(-self.half, self.half, int(grid))
        g1, g2 = np.meshgrid(a, a, indexing="ij")
        xi = np.column_stack([g1.ravel(), g2.ravel()])
        g = self.grad_eta(xi)
        h = self.hessian_eta(xi)
        slope = np.abs(g[:, 0]) + np.abs(g[:, 1])
        curv = np.abs(h[:, 0, 0]) + np.abs(h[:, 1, 1]) + np.abs(h[:, 0, 1])
        if not (np.all(np.isfinite(slope)) and np.all(np.isfinite(curv))):
            return float("inf"), float("inf")
        return float(slope.max()), float(curv.max())


class ImplicitChart(BoundaryChart):
    """Carta obtida resolvendo F(origem + ξ₁e₁ + ξ₂e₂ + ζe₃) = 0 em ζ por Newton."""

    def __init__(self, chart_id: int, shape: IShape, origin: np.ndarray, half: float):
        normal = shape.grad(np.atleast_2d(origin))[0]
        super().__init__(chart_id, origin, frame_from_normal(normal), half)
        self.shape = shape

    def wrap(self, d: np.ndarray) -> np.ndarray:
        return self.shape.wrap(d)

    def _graph(self, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        xi = np.atleast_2d(xi)
        n = len(xi)
        frames = np.broadcast_to(self.frame, (n, 3, 3))
        pts, zeta = solve_graph(self.shape, np.broadcast_to(self.origin, (n, 3)), frames, xi)
        return pts, zeta, frames

    def eta(self, xi: np.ndarray) -> np.ndarray:
        return self._graph(xi)[1]

    def grad_eta(self, xi: np.ndarray) -> np.ndarray:
        pts, _, frames = self._graph(xi)
        return implicit_derivatives(self.shape, pts, frames)[0]

    def hessian_eta(self, xi: np.ndarray) -> np.ndarray:
        pts, _, frames = self._graph(xi)
        return implicit_derivatives(self.shape, pts, frames)[1]


class GraphChart(BoundaryChart):
    """Carta analítica dada por η, ∇η e ∇²η em forma fechada."""

    def __init__(
        self,
        chart_id: int,
        eta: Callable[[np.ndarray], np.ndarray],
        grad: Callable[[np.ndarray], np.ndarray],
        hessian: Callable[[np.ndarray], np.ndarray],
        half: float,
        origin: Optional[np.ndarray] = None,
        frame: Optional[np.ndarray] = None,
        grid: int = 64,
    ):
        super().__init__(
            chart_id,
            np.zeros(3) if origin is None else origin,
            np.eye(3) if frame is None else frame,
            half,
        )
        self._eta = eta
        self._grad = grad
        self._hessian = hessian
        _, self.c_eta = self.curvature_bound(grid)

    def eta(self, xi: np.ndarray) -> np.ndarray:
        return self._eta(np.atleast_2d(xi))

    def grad_eta(self, xi: np.ndarray) -> np.ndarray:
        return self._grad(np.atleast_2d(xi))

    def hessian_eta(self, xi: np.ndarray) -> np.ndarray:
        return self._hessian(np.atleast_2d(xi))


def gaussian_bump_chart(h: float = 0.5, w: float = 1.0, half: float = 1.5, chart_id: int = 0) -> GraphChart:
    """η = −h·exp(−r²/w²) com moldura identidade."""

    def eta(xi):
        return -h * np.exp(-(xi ** 2).sum(axis=1) / w ** 2)

    def grad(xi):
        e = np.exp(-(xi ** 2).sum(axis=1) / w ** 2)
        return (2.0 * h / w ** 2) * e[:, None] * xi

    def hessian(xi):
        e = np.exp(-(xi ** 2).sum(axis=1) / w ** 2)
        outer = np.einsum("ni,nj->nij", xi, xi)
        return (2.0 * h / w ** 2) * e[:, None, None] * (np.eye(2) - 2.0 * outer / w ** 2)

    return GraphChart(chart_id, eta, grad, hessian, half)


def flat_chart(half: float = 0.5, chart_id: int = 0) -> GraphChart:
    """η ≡ 0."""
    return GraphChart(
        chart_id,
        lambda xi: np.zeros(len(xi)),
        lambda xi: np.zeros((len(xi), 2)),
        lambda xi: np.zeros((len(xi), 2, 2)),
        half,
    )


def sphere_chart(radius: float = 1.0, half: float = 0.25, chart_id: int = 0) -> GraphChart:
    """Calota inferior da esfera centrada na origem: η = −√(R² − r²)."""

    def eta(xi):
        return -np.sqrt(radius ** 2 - (xi ** 2).sum(axis=1))

    def grad(xi):
        root = np.sqrt(radius ** 2 - (xi ** 2).sum(axis=1))
        return xi / root[:, None]

    def hessian(xi):
        root = np.sqrt(radius ** 2 - (xi ** 2).sum(axis=1))
        outer = np.einsum("ni,nj->nij", xi, xi)
        return np.eye(2) / root[:, None, None] + outer / root[:, None, None] ** 3

    return GraphChart(chart_id, eta, grad, hessian, half)


def quadratic_chart(a11: float, a12: float, a22: float, half: float = 0.25, chart_id: int = 0) -> GraphChart:
    """η = ½(a₁₁ξ₁² + 2a₁₂ξ₁ξ₂ + a₂₂ξ₂²), com ∇η(0) = 0."""
    hess = np.array([[a11, a12], [a12, a22]], dtype=float)

    def eta(xi):
        return 0.5 * np.einsum("ni,ij,nj->n", xi, hess, xi)

    def grad(xi):
        return xi @ hess

    def hessian(xi):
        return np.broadcast_to(hess, (len(xi), 2, 2)).copy()

    return GraphChart(chart_id, eta, grad, hessian, half)
