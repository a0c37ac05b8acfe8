"""
Mudança de variáveis na fronteira Φ_k, medidas de velocidades rasantes e
transferência tempo-de-fronteira → volume.

x_b(x, v) depende só da direção de v, de modo que |n(x_b)·v| = r·c(ω) com
v = rω. As medidas de velocidades rasantes integram o raio em forma fechada e
deixam o Monte Carlo apenas na esfera de direções.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.special import gammainc

from app.application.geometry import boundary_phase_samples, chart_at, volume_estimate
from app.application.raytrace import backward_exit, sample_rays, trace_exits
from app.core.exceptions import GrazingRay
from app.core.parallel import map_chunks
from app.core.rng import Chunk, stream
from app.core.settings import settings
from app.domain.models import Domain, PhasePoint

logger = logging.getLogger(__name__)

TestFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

PSI_GALLERY: Dict[str, TestFunction] = {
    "zero": lambda x, v: np.zeros(len(x)),
    "one": lambda x, v: np.ones(len(x)),
    "gaussian": lambda x, v: np.exp(-0.5 * (v ** 2).sum(axis=1)),
}


@dataclass(frozen=True)
class BoundaryMap:
    """Φ_k: (x, v) ∈ γ₊ ↦ (x_b(x, v), v) ∈ γ₋, restrito a |n(x_b)·v| > |v|/k."""
    domain: Domain
    k: int

    def forward(self, x: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(x_b, admitido) em lote."""
        exits = trace_exits(self.domain, x, v)
        with np.errstate(invalid="ignore"):
            admitted = np.isfinite(exits.t) & (np.abs(exits.speed_normal) > np.linalg.norm(v, axis=1) / self.k)
        return exits.x_exit, admitted


def _unit_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    w = rng.standard_normal((n, 3))
    return w / np.linalg.norm(w, axis=1)[:, None]


def _area_factor(chart, xi: np.ndarray) -> float:
    g = chart.grad_eta(xi[None, :])[0]
    return float(np.sqrt(1.0 + g @ g))


def cov_jacobian(domain: Domain, p: PhasePoint, k: Optional[int] = None, h: Optional[float] = None) -> Tuple[float, float]:
    """
    |J| de Φ_k em coordenadas de carta e o resíduo contra o determinante por diferenças.

    Forma fechada: J = (√(1+|∇η|²)/√(1+|∇φ|²))·(n(x)·v)/(n(x̃)·v), com η a
    carta em x e φ a carta em x̃ = x_b(x, v).

    Raises:
        GrazingRay: Se |n(x_b)·v| ≤ |v|/k ou se o raio não volta à fronteira
    """
    k = settings.k_cut if k is None else k
    h = 1e-6 * domain.diam if h is None else h
    speed = float(np.linalg.norm(p.v))
    rec = backward_exit(domain, p)
    if not rec.hits or abs(rec.speed_normal) <= speed / k:
        raise GrazingRay(f"Φ_k indefinido: |n(x_b)·v| = {abs(rec.speed_normal):.3e}")

    chart, xi = chart_at(domain, p.x)
    chart_b, xi_b = chart_at(domain, rec.x_exit)
    g = domain.implicit_shape.grad(p.x[None, :])[0]
    n_x = g / np.linalg.norm(g)
    closed = _area_factor(chart, xi) / _area_factor(chart_b, xi_b) * float(n_x @ p.v) / rec.speed_normal

    offsets = np.array([[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]])
    starts = chart.graph_point(xi[None, :] + offsets)
    exits = trace_exits(domain, starts, np.repeat(p.v[None, :], 4, axis=0))
    mapped, _ = chart_b.to_local(exits.x_exit)
    jac = np.column_stack([(mapped[0] - mapped[1]) / (2 * h), (mapped[2] - mapped[3]) / (2 * h)])
    fd = abs(float(np.linalg.det(jac)))
    residual = abs(abs(closed) - fd) / abs(closed)
    return abs(closed), residual


def jacobian_audit(domain: Domain, n: int, seed: int, k: Optional[int] = None) -> Dict[str, float]:
    """Resíduos de cov_jacobian em n raios de γ₊ não rasantes."""
    k = settings.k_cut if k is None else k
    rng = stream(seed, "jacobian_audit")
    pts = boundary_phase_samples(domain, n, rng, settings.v_max, outgoing=True)
    residuals = []
    skipped = 0
    for x, v in zip(pts["x"], pts["v"]):
        try:
            _, res = cov_jacobian(domain, PhasePoint(x, v), k)
        except GrazingRay:
            skipped += 1
            continue
        residuals.append(res)
    residuals = np.asarray(residuals)
    if skipped:
        logger.debug(f"jacobian_audit: {skipped} raios rasantes ignorados")
    return {
        "n": int(len(residuals)),
        "skipped": skipped,
        "max_residual": float(residuals.max()) if len(residuals) else 0.0,
        "fraction_below_1e-3": float((residuals < 1e-3).mean()) if len(residuals) else 1.0,
    }


def injectivity_audit(domain: Domain, n: int, seed: int, k: Optional[int] = None) -> Dict[str, float]:
    """Φ_k é injetiva: x_f(x_b(x, v), v) = x em γ₊ (erro relativo ao diâmetro)."""
    k = settings.k_cut if k is None else k
    pts = boundary_phase_samples(domain, n, stream(seed, "injectivity_audit"), settings.v_max, outgoing=True)
    xb, admitted = BoundaryMap(domain, k).forward(pts["x"], pts["v"])
    rows = np.nonzero(admitted)[0]
    if len(rows) == 0:
        return {"n": 0, "max_error": 0.0}
    back = trace_exits(domain, xb[rows], pts["v"][rows], forward=True)
    err = np.linalg.norm(domain.shape.wrap(back.x_exit - pts["x"][rows]), axis=1) / domain.diam
    return {"n": int(len(rows)), "max_error": float(np.nanmax(err))}


def pushforward_check(
    domain: Domain,
    psi: TestFunction,
    n: int,
    seed: int,
    k: Optional[int] = None,
    v_max: Optional[float] = None,
    threads: Optional[int] = None,
) -> Dict[str, float]:
    """
    Desigualdade de push-forward de Φ_k.

    rhs = ∫_{γ₊, |n(x_b)·v|>|v|/k} ψ(x_b, v)|n(x)·v|;  lhs = ∫_{γ₋, |n(x̃)·v|>|v|/k} ψ(x̃, v)|n(x̃)·v|.
    """
    k = settings.k_cut if k is None else k
    v_max = settings.v_max if v_max is None else v_max
    phi_k = BoundaryMap(domain, k)

    def rhs_chunk(chunk: Chunk) -> np.ndarray:
        pts = boundary_phase_samples(domain, chunk.size, chunk.rng, v_max, outgoing=True)
        xb, admitted = phi_k.forward(pts["x"], pts["v"])
        base = pts["weight"] * np.abs(pts["vn"])
        value = np.zeros(chunk.size)
        rows = np.nonzero(admitted)[0]
        value[rows] = base[rows] * psi(xb[rows], pts["v"][rows])
        excluded = np.where(admitted, 0.0, base * psi(pts["x"], pts["v"]))
        return np.column_stack([value, excluded])

    def lhs_chunk(chunk: Chunk) -> np.ndarray:
        pts = boundary_phase_samples(domain, chunk.size, chunk.rng, v_max)
        keep = np.abs(pts["vn"]) > np.linalg.norm(pts["v"], axis=1) / k
        return pts["weight"] * np.abs(pts["vn"]) * psi(pts["x"], pts["v"]) * keep

    rhs = np.concatenate(map_chunks(rhs_chunk, n, seed, "pushforward_rhs", threads=threads))
    lhs = np.concatenate(map_chunks(lhs_chunk, n, seed, "pushforward_lhs", threads=threads))
    lhs_se = float(lhs.std(ddof=1) / math.sqrt(len(lhs)))
    rhs_se = float(rhs[:, 0].std(ddof=1) / math.sqrt(len(rhs)))
    return {
        "lhs": float(lhs.mean()),
        "lhs_std_error": lhs_se,
        "rhs": float(rhs[:, 0].mean()),
        "rhs_std_error": rhs_se,
        "excluded_by_cut": float(rhs[:, 1].mean()),
        "passed": bool(lhs.mean() >= rhs[:, 0].mean() - 3.0 * math.hypot(lhs_se, rhs_se)),
    }


def _normal_speed_per_unit(domain: Domain, x: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """c(ω) = n(x_b(x, ω))·ω; zero para raios sem saída."""
    exits = trace_exits(domain, np.repeat(np.atleast_2d(x), len(omega), axis=0), omega)
    return np.where(np.isfinite(exits.t), exits.speed_normal, 0.0)


def grazing_velocity_measure(domain: Domain, x: np.ndarray, delta: float, n_max: float, n: int, seed: int) -> Tuple[float, float]:
    """
    m₃{v ∈ B(0, N): |n(x_b(x, v))·v| ≤ δ}.

    Para cada direção ω o conjunto de raios é [0, min(N, δ/|c(ω)|)]; a integral
    radial é exata e o Monte Carlo fica em ω.
    """
    omega = _unit_sphere(n, stream(seed, "grazing_velocity_measure"))
    c = np.abs(_normal_speed_per_unit(domain, x, omega))
    with np.errstate(divide="ignore"):
        radius = np.where(c > 0, np.minimum(n_max, delta / c), n_max)
    values = 4.0 * math.pi * radius ** 3 / 3.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n))


def _half_gaussian_radial(radius: np.ndarray) -> np.ndarray:
    """∫₀^R r² e^{−r²/4} dr = 2√π·P(3/2, R²/4)."""
    return 2.0 * math.sqrt(math.pi) * gammainc(1.5, radius ** 2 / 4.0)


def small_sup_estimate(domain: Domain, delta: float, n: int, seed: int, n_base: int = 100) -> Dict[str, float]:
    """
    sup sobre pontos de fronteira x̃ de ∫ 𝟙_{−δ < n(x_b(x̃,−v))·(−v) < 0} μ(v)^{1/2} dv.

    Com w = −v = rω e c(ω) = n(x_b(x̃, ω))·ω < 0 a condição vira r < δ/|c|.
    """
    rng = stream(seed, "small_sup")
    base = boundary_phase_samples(domain, n_base, rng, settings.v_max)["x"]
    estimates = np.zeros(n_base)
    errors = np.zeros(n_base)
    for i, x in enumerate(base):
        omega = _unit_sphere(n, rng)
        c = _normal_speed_per_unit(domain, x, omega)
        incoming = c < 0
        with np.errstate(divide="ignore"):
            radius = np.where(incoming, delta / np.abs(np.where(incoming, c, 1.0)), 0.0)
        values = 4.0 * math.pi * _half_gaussian_radial(radius) * incoming
        estimates[i] = values.mean()
        errors[i] = values.std(ddof=1) / math.sqrt(n)
    worst = int(np.argmax(estimates))
    return {
        "estimate": float(estimates[worst]),
        "std_error": float(errors[worst]),
        "mean": float(estimates.mean()),
        "n_base": n_base,
    }


def tube_volume_transfer(
    domain: Domain,
    h: TestFunction,
    t: float,
    n: int,
    seed: int,
    v_max: Optional[float] = None,
    threads: Optional[int] = None,
) -> Dict[str, float]:
    """
    lhs = ∫₀ᵗ∫_{γ₊} h(x − sv, v)𝟙_{s<t_b}|n·v| dS dv ds contra rhs = ∬ h dy dv (v truncado em V_max).
    """
    v_max = settings.v_max if v_max is None else v_max

    def lhs_chunk(chunk: Chunk) -> np.ndarray:
        rng = chunk.rng
        pts = boundary_phase_samples(domain, chunk.size, rng, v_max, outgoing=True)
        s = t * rng.random(chunk.size)
        tb = trace_exits(domain, pts["x"], pts["v"]).t
        inside = s < tb
        value = np.zeros(chunk.size)
        rows = np.nonzero(inside)[0]
        y = pts["x"][rows] - s[rows, None] * pts["v"][rows]
        value[rows] = t * pts["weight"][rows] * pts["vn"][rows] * h(y, pts["v"][rows])
        return value

    volume, _ = volume_estimate(domain, seed=seed)
    ball = 4.0 / 3.0 * math.pi * v_max ** 3

    def rhs_chunk(chunk: Chunk) -> np.ndarray:
        x, v = sample_rays(domain, chunk.size, chunk.rng, v_max)
        return volume * ball * h(x, v)

    lhs = np.concatenate(map_chunks(lhs_chunk, n, seed, "tube_transfer_lhs", threads=threads))
    rhs = np.concatenate(map_chunks(rhs_chunk, n, seed, "tube_transfer_rhs", threads=threads))
    lhs_se = float(lhs.std(ddof=1) / math.sqrt(len(lhs)))
    rhs_se = float(rhs.std(ddof=1) / math.sqrt(len(rhs)))
    return {
        "lhs": float(lhs.mean()),
        "lhs_std_error": lhs_se,
        "rhs": float(rhs.mean()),
        "rhs_std_error": rhs_se,
        "passed": bool(lhs.mean() <= rhs.mean() + 3.0 * math.hypot(lhs_se, rhs_se)),
    }
