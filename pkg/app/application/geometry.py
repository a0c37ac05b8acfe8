"""
Geometria de domínios: decomposição em cartas, normais, segunda forma e amostragem da fronteira.
"""
import logging
import time
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from app.core.exceptions import ChartMiss, DegenerateBoundary, NotOnBoundary, NotTangent
from app.core.rng import stream
from app.core.settings import settings
from app.domain.charts import BoundaryChart, ImplicitChart, frame_from_normal, implicit_derivatives, solve_graph
from app.domain.interfaces import IShape
from app.domain.models import Domain
from app.infrastructure.shapes import build_shape

logger = logging.getLogger(__name__)

SLOPE_BOUND = 0.125
SEED_SPACING = 1.6


def _check_charts(shape: IShape, origins: np.ndarray, half: float, grid: int, batch: int = 64):
    """Inclinação e curvatura máximas por carta numa grade grid×grid."""
    a = np.linspace(-half, half, grid)
    g1, g2 = np.meshgrid(a, a, indexing="ij")
    xi_grid = np.column_stack([g1.ravel(), g2.ravel()])
    frames = np.array([frame_from_normal(n) for n in shape.grad(origins)])
    slopes = np.empty(len(origins))
    curvs = np.empty(len(origins))
    for start in range(0, len(origins), batch):
        sl = slice(start, min(start + batch, len(origins)))
        m = sl.stop - sl.start
        o = np.repeat(origins[sl], len(xi_grid), axis=0)
        fr = np.repeat(frames[sl], len(xi_grid), axis=0)
        xi = np.tile(xi_grid, (m, 1))
        pts, _ = solve_graph(shape, o, fr, xi)
        eta_i, hess = implicit_derivatives(shape, pts, fr)
        slope = (np.abs(eta_i[:, 0]) + np.abs(eta_i[:, 1])).reshape(m, -1)
        curv = (np.abs(hess[:, 0, 0]) + np.abs(hess[:, 1, 1]) + np.abs(hess[:, 0, 1])).reshape(m, -1)
        slope = np.where(np.isfinite(slope), slope, np.inf)
        curv = np.where(np.isfinite(curv), curv, np.inf)
        slopes[sl] = slope.max(axis=1)
        curvs[sl] = curv.max(axis=1)
    return slopes, curvs


def _coverage_seeds(shape: IShape, spacing: float) -> np.ndarray:
    return shape.chart_seeds(0.5 * spacing)


def decompose_boundary(shape: IShape, delta: Optional[float] = None, grid: Optional[int] = None) -> Tuple[List[BoundaryChart], float, float]:
    """
    Decompõe ∂Ω em cartas δ com |∂₁η| + |∂₂η| ≤ 1/8.

    Começa em δ₀ = diam/4 (ou no δ pedido) e divide por dois até a condição de
    inclinação valer numa grade grid×grid de cada carta. Sementes com
    espaçamento 1,6δ dão sobreposição de 20%; pontos de prova não cobertos viram
    novas cartas.

    Returns:
        (cartas, δ usado, C_η global)

    Raises:
        DegenerateBoundary: Se δ cair abaixo de delta_min
    """
    grid = int(grid or settings.chart_grid)
    delta = float(delta or shape.diam / 4.0)
    started = time.perf_counter()
    while True:
        if delta < settings.delta_min:
            raise DegenerateBoundary(f"Condição de inclinação falhou para todo δ >= {settings.delta_min}")
        seeds = shape.chart_seeds(SEED_SPACING * delta)
        slopes, curvs = _check_charts(shape, seeds, delta, grid)
        if np.any(slopes > SLOPE_BOUND):
            logger.debug(f"δ={delta:.4g}: inclinação máxima {slopes.max():.3g} > 1/8, reduzindo")
            delta /= 2.0
            continue

        charts: List[BoundaryChart] = []
        for i, origin in enumerate(seeds):
            chart = ImplicitChart(i, shape, origin, delta)
            chart.c_eta = float(curvs[i])
            charts.append(chart)
        domain = Domain(shape=shape, charts=tuple(charts), delta=delta, c_eta=float(curvs.max()), kind=shape.kind)

        ok = True
        check_points = _coverage_seeds(shape, SEED_SPACING * delta)
        for _ in range(4):
            ids, _ = domain.locate(check_points)
            missing = check_points[ids < 0]
            if len(missing) == 0:
                break
            extra_slopes, extra_curvs = _check_charts(shape, missing, delta, grid)
            if np.any(extra_slopes > SLOPE_BOUND):
                ok = False
                break
            base = len(charts)
            for j, origin in enumerate(missing):
                chart = ImplicitChart(base + j, shape, origin, delta)
                chart.c_eta = float(extra_curvs[j])
                charts.append(chart)
            curvs = np.concatenate([curvs, extra_curvs])
            domain = Domain(shape=shape, charts=tuple(charts), delta=delta, c_eta=float(curvs.max()), kind=shape.kind)
        if not ok:
            delta /= 2.0
            continue

        logger.info(
            f"Decomposição concluída: {len(charts)} cartas, δ={delta:.4g}, "
            f"C_η={curvs.max():.4g} ({time.perf_counter() - started:.2f}s)"
        )
        return charts, delta, float(curvs.max())


def build_domain(kind: str, params: Optional[Dict[str, Any]] = None, delta: Optional[float] = None, grid: Optional[int] = None) -> Domain:
    """Constrói um domínio da galeria já decomposto em cartas."""
    shape = build_shape(kind, params)
    charts, used_delta, c_eta = decompose_boundary(shape, delta=delta, grid=grid)
    return Domain(
        shape=shape,
        charts=tuple(charts),
        delta=used_delta,
        c_eta=c_eta,
        kind=shape.kind,
        name=kind,
        params=dict(params or {}),
    )


def chart_domain(chart: BoundaryChart) -> Domain:
    """Domínio "composite" formado por uma única carta analítica (sem forma implícita)."""
    return Domain(shape=None, charts=(chart,), delta=chart.half, c_eta=chart.c_eta, kind="composite")


def boundary_distance(domain: Domain, x: np.ndarray) -> np.ndarray:
    """Estimativa de primeira ordem |F|/|∇F| da distância a ∂Ω."""
    x = np.atleast_2d(x)
    shape = domain.implicit_shape
    f = shape.phi(x)
    g = np.linalg.norm(shape.grad(x), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(g > 0, np.abs(f) / g, np.inf)


def chart_at(domain: Domain, x: np.ndarray) -> Tuple[BoundaryChart, np.ndarray]:
    """Carta mais central que cobre o ponto de fronteira x e as suas coordenadas ξ."""
    x = np.asarray(x, dtype=float).reshape(1, 3)
    dist = boundary_distance(domain, x)[0]
    if not dist <= settings.tol_b * domain.diam:
        raise NotOnBoundary(f"Ponto a distância {dist:.3e} de ∂Ω")
    ids, xi = domain.locate(x)
    if ids[0] < 0:
        raise ChartMiss(f"Nenhuma carta cobre {x[0].tolist()}")
    return domain.charts[ids[0]], xi[0]


def normal_at(domain: Domain, x: np.ndarray) -> np.ndarray:
    """
    Normal exterior unitária n(x) = (∂₁η, ∂₂η, −1)/√(1+|∇η|²) na carta que cobre x.

    Raises:
        NotOnBoundary: Se x estiver fora da tolerância tol_b·diam
        ChartMiss: Se nenhuma carta cobrir x
    """
    chart, xi = chart_at(domain, x)
    return chart.normal(xi[None, :])[0]


def second_form(domain: Domain, x: np.ndarray, u: np.ndarray) -> float:
    """
    Σ uᵢuⱼ∂ᵢ∂ⱼη em x na carta realinhada (∇η(x) = 0); negativo indica ponto estritamente não convexo.

    Raises:
        NotOnBoundary: Se x não estiver em ∂Ω
        NotTangent: Se u não for tangente ou for nulo
    """
    chart, xi = chart_at(domain, x)
    u = np.asarray(u, dtype=float)
    n = chart.normal(xi[None, :])[0]
    norm_u = np.linalg.norm(u)
    if norm_u == 0 or abs(np.dot(u, n)) >= 1e-8 * norm_u:
        raise NotTangent(f"|u·n| = {abs(np.dot(u, n)):.3e} para |u| = {norm_u:.3e}")
    p = chart.graph_point(xi[None, :])
    return float(second_form_batch(domain, p, u[None, :])[0])


def second_form_batch(domain: Domain, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    uᵀ∇²F u/|∇F| em lote, sem checar tangência.

    Raises:
        GeometryError: Se o domínio não tiver forma implícita
    """
    shape = domain.implicit_shape
    g = shape.grad(x)
    h = shape.hessian(x)
    return np.einsum("ni,nij,nj->n", u, h, u) / np.linalg.norm(g, axis=1)


def chart_arrays(domain: Domain) -> Tuple[np.ndarray, np.ndarray]:
    """Origens (M, 3) e molduras (M, 3, 3) de todas as cartas."""
    origins = np.array([c.origin for c in domain.charts])
    frames = np.array([c.frame for c in domain.charts])
    return origins, frames


def graph_points(domain: Domain, chart_ids: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Pontos de fronteira das cartas `chart_ids` em ξ, em lote."""
    if domain.shape is None:
        out = np.empty((len(xi), 3))
        for cid in np.unique(chart_ids):
            rows = chart_ids == cid
            out[rows] = domain.charts[cid].graph_point(xi[rows])
        return out
    origins, frames = chart_arrays(domain)
    pts, _ = solve_graph(domain.implicit_shape, origins[chart_ids], frames[chart_ids], xi)
    return pts


def boundary_from_uniform(domain: Domain, u: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Pontos de fronteira ponderados por área a partir de uniformes u ∈ [0,1)³.

    O peso M·(2δ)²·√(1+|∇η|²)/multiplicidade faz da soma média uma
    estimativa não enviesada da área (partição da unidade).
    """
    m = len(domain.charts)
    chart_ids = np.minimum((u[:, 0] * m).astype(int), m - 1)
    xi = (2.0 * u[:, 1:3] - 1.0) * domain.delta
    x = graph_points(domain, chart_ids, xi)
    _, frames = chart_arrays(domain)
    g = domain.implicit_shape.grad(x)
    gnorm = np.linalg.norm(g, axis=1)
    f3 = np.abs((g * frames[chart_ids][:, :, 2]).sum(axis=1))
    mult = np.maximum(domain.multiplicity(x), 1)
    weights = m * (2.0 * domain.delta) ** 2 * (gnorm / f3) / mult
    return {
        "x": x,
        "normal": g / gnorm[:, None],
        "weight": weights,
        "chart_id": chart_ids,
        "xi": xi,
    }


def sample_boundary(domain: Domain, n: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    """Amostra n pontos de fronteira ponderados por área."""
    return boundary_from_uniform(domain, rng.random((int(n), 3)))


def boundary_phase_samples(domain: Domain, n: int, rng: np.random.Generator, v_max: float, outgoing: bool = False) -> Dict[str, np.ndarray]:
    """
    Pontos de γ₋ (ou γ₊) com x ponderado por área e v uniforme na meia-bola de raio v_max.

    O campo "weight" já inclui o volume da meia-bola; "vn" é n·v.
    """
    pts = boundary_from_uniform(domain, rng.random((int(n), 3)))
    direction = rng.standard_normal((int(n), 3))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    v = direction * (v_max * rng.random(int(n)) ** (1.0 / 3.0))[:, None]
    vn = (v * pts["normal"]).sum(axis=1)
    flip = vn < 0 if outgoing else vn > 0
    v = np.where(flip[:, None], -v, v)
    pts["v"] = v
    pts["vn"] = np.where(flip, -vn, vn)
    pts["weight"] = pts["weight"] * (2.0 / 3.0) * np.pi * v_max ** 3
    return pts


def tangent_directions(normals: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Direções unitárias tangentes cos α·t₁ + sin α·t₂ num triedro ortonormal com n."""
    t1 = np.array([frame_from_normal(n)[:, 0] for n in normals])
    t2 = np.cross(normals, t1)
    return np.cos(angles)[:, None] * t1 + np.sin(angles)[:, None] * t2


def classify_convexity(domain: Domain, n: int, seed: int) -> Dict[str, float]:
    """Frações de pares (x, u) tangentes com segunda forma negativa, nula e positiva."""
    rng = stream(seed, "classify_convexity")
    sample = sample_boundary(domain, n, rng)
    u = tangent_directions(sample["normal"], rng.uniform(0, 2 * np.pi, int(n)))
    values = second_form_batch(domain, sample["x"], u)
    w = sample["weight"] / sample["weight"].sum()
    tol = 1e-9
    return {
        "nonconvex_fraction": float(w[values < -tol].sum()),
        "flat_fraction": float(w[np.abs(values) <= tol].sum()),
        "convex_fraction": float(w[values > tol].sum()),
        "min_second_form": float(values.min()),
    }


def volume_estimate(domain: Domain, n: int = 200_000, seed: int = 0) -> Tuple[float, float]:
    """|Ω| exato quando a forma sabe calcular; caso contrário Monte Carlo na caixa."""
    shape = domain.shape
    if hasattr(shape, "volume"):
        return float(shape.volume()), 0.0
    lo, hi = shape.bounding_box()
    box = float(np.prod(hi - lo))
    rng = stream(seed, "volume_estimate")
    inside = shape.phi(lo + (hi - lo) * rng.random((n, 3))) < 0
    p = inside.mean()
    return box * float(p), box * float(np.sqrt(p * (1 - p) / n))


def surface_area_estimate(domain: Domain, n: int = 20_000, seed: int = 0) -> Tuple[float, float]:
    """Área de ∂Ω pelos pesos da amostragem por cartas."""
    w = sample_boundary(domain, n, stream(seed, "surface_area"))["weight"]
    return float(w.mean()), float(w.std(ddof=1) / np.sqrt(n))


def geometry_info(domain: Domain, seed: int = 0) -> Dict[str, Any]:
    """Resumo da decomposição e da geometria de um domínio."""
    volume, volume_err = volume_estimate(domain, seed=seed)
    area, area_err = surface_area_estimate(domain, seed=seed)
    return {
        "kind": domain.kind,
        "chart_count": len(domain.charts),
        "delta": domain.delta,
        "c_eta": domain.c_eta,
        "diam": domain.diam,
        "volume": volume,
        "volume_std_error": volume_err,
        "surface_area": area,
        "surface_area_std_error": area_err,
        "convexity": classify_convexity(domain, 4096, seed),
    }
