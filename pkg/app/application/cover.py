"""
Recobrimento tubular 𝒪_{ε,ε₁} do conjunto singular e as suas verificações.

Cada carta m recebe a rede c_{m,i,j} = (εi, εj), |i|,|j| ≤ N_ε = ⌈δ/ε⌉, com
retângulos de meio-lado a (a = ε₁ ou C_*ε₁), moldura fixa (x̂₁, x̂₂, n_c) no
centro e setores de velocidade

    |v·n_c| ≤ 8 C_η a·max(1, |v|),   |θ_v − εℓ| < a,   0 ≤ ℓ ≤ L_ε = ⌈2π/ε⌉.

O tubo da célula é varrido por y + τ·ŵ_y(θ) + s·n_c com y no retângulo,
θ na janela, |s| < ε e τ ∈ [0, t_f(y, ŵ_y)]; ŵ_y(θ) é a direção da moldura
levantada ao longo de n_c até o plano tangente em y. Células cujo lançamento
é convexo em todas as direções têm t_f = 0 (tubos curtos, busca por árvore
KD); as demais (tubos longos) passam por um pré-filtro vetorizado e por uma
busca em grade com zoom no ponto de lançamento.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import erfc

from app.application.geometry import (
    boundary_from_uniform,
    boundary_phase_samples,
    chart_arrays,
    graph_points,
    surface_area_estimate,
    volume_estimate,
)
from app.application.raytrace import sample_rays, trace_exits
from app.application.singular import SingularIndex
from app.core.exceptions import CoverError, EpsTooLarge
from app.core.parallel import map_chunks
from app.core.rng import Chunk, stream
from app.core.settings import settings
from app.domain.charts import tangent_basis_local
from app.domain.models import CoverParams, Domain, PhasePoint, SingularSampleSet

logger = logging.getLogger(__name__)

ZOOM_GRID = 5
ZOOM_LEVELS = 5
ROUND_SIZE = 16
QUERY_BLOCK = 64
SLOPE_FACTOR = 1.0 + 1.0 / 8.0


def cone_constants(params: CoverParams, c1_norm: float = 1.0 / 8.0) -> Dict[str, float]:
    """
    Constantes do lema do cone.

    C₂ = √(8C_*/3)·(1+‖η‖_{C²})^{1/2}
    C₃ = (4C_* + 8C_*(1+‖η‖_{C¹})^{1/2} + 2/C̃)/C₂
    C₄ = C₃(1+‖η‖_{C²}),  N₁ = ⌊8C₃/√ε⌋,  C̃ = c_tilde_factor·C_*
    """
    c_star = params.c_star
    c2_norm = params.c_eta
    c_tilde = settings.c_tilde_factor * c_star
    c2 = math.sqrt(8.0 * c_star / 3.0) * math.sqrt(1.0 + c2_norm)
    c3 = (4.0 * c_star + 8.0 * c_star * math.sqrt(1.0 + c1_norm) + 2.0 / c_tilde) / c2
    c4 = c3 * (1.0 + c2_norm)
    return {
        "C2": c2,
        "C3": c3,
        "C4": c4,
        "N1": int(math.floor(8.0 * c3 / math.sqrt(params.eps))),
        "C_tilde": c_tilde,
    }


def loglog_slope(xs, ys) -> float:
    """Inclinação de mínimos quadrados de log(y) contra log(x)."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.maximum(np.asarray(ys, dtype=float), 1e-300))
    if len(x) < 2:
        return float("nan")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def ladder_ratios(levels, estimates, std_errors, factor: float = 2.0, sigmas: float = 3.0) -> Dict[str, Any]:
    """
    Razão entre níveis consecutivos da escada contra a razão linear prevista ε_a/ε_b.

    A razão medida vira um intervalo com margens de `sigmas` erros padrão em
    cada estimativa; o par passa se esse intervalo encontra
    [previsto/factor, previsto·factor].
    """
    order = np.argsort(np.asarray(levels, dtype=float))[::-1]
    eps = np.asarray(levels, dtype=float)[order]
    est = np.asarray(estimates, dtype=float)[order]
    se = np.asarray(std_errors, dtype=float)[order]
    pairs = []
    for a in range(len(eps) - 1):
        b = a + 1
        predicted = eps[a] / eps[b]
        top_b = est[b] + sigmas * se[b]
        bottom_b = est[b] - sigmas * se[b]
        low = max(est[a] - sigmas * se[a], 0.0) / top_b if top_b > 0 else float("inf")
        high = (est[a] + sigmas * se[a]) / bottom_b if bottom_b > 0 else float("inf")
        ratio = est[a] / est[b] if est[b] > 0 else float("inf")
        pairs.append({
            "levels": [float(eps[a]), float(eps[b])],
            "ratio": float(ratio),
            "interval": [float(low), float(high)],
            "predicted": float(predicted),
            "passed": bool(low <= factor * predicted and high >= predicted / factor),
        })
    return {"pairs": pairs, "passed": bool(pairs) and all(p["passed"] for p in pairs)}


def _wrap_angle(a: np.ndarray) -> np.ndarray:
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def _tangent_pair(n: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Base ortonormal (t₁, t₂) do plano ortogonal a cada normal unitária (n, 3)."""
    helper = np.where(np.abs(n[:, :1]) < 0.9, np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 1.0, 0.0]]))
    t1 = helper - (helper * n).sum(axis=1)[:, None] * n
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    return t1, np.cross(n, t1)


def _box_ls(d: np.ndarray, w: np.ndarray, n: np.ndarray, t_max: np.ndarray, eps: float):
    """
    min |d − τw − s n| com τ ∈ [0, t_max], |s| ≤ ε (|w| = |n| = 1).

    Returns:
        (distância, τ ótimo)
    """
    g = (w * n).sum(axis=-1)
    dw = (d * w).sum(axis=-1)
    dn = (d * n).sum(axis=-1)
    det = np.maximum(1.0 - g ** 2, 1e-15)
    tau_i = (dw - g * dn) / det
    s_i = (dn - g * dw) / det

    def resid(tau, s):
        r = d - tau[..., None] * w - s[..., None] * n
        return np.linalg.norm(r, axis=-1)

    best = np.full(dw.shape, np.inf)
    best_tau = np.zeros(dw.shape)
    inside = (tau_i >= 0) & (tau_i <= t_max) & (np.abs(s_i) <= eps)
    cand = np.where(inside, resid(tau_i, s_i), np.inf)
    upd = cand < best
    best = np.where(upd, cand, best)
    best_tau = np.where(upd, tau_i, best_tau)

    zero = np.zeros_like(dw)
    for tau in (zero, t_max):
        s = np.clip(((d - tau[..., None] * w) * n).sum(axis=-1), -eps, eps)
        cand = resid(tau, s)
        upd = cand < best
        best = np.where(upd, cand, best)
        best_tau = np.where(upd, tau, best_tau)
    for s0 in (-eps, eps):
        s = np.full_like(dw, s0)
        tau = np.clip(((d - s[..., None] * n) * w).sum(axis=-1), 0.0, t_max)
        cand = resid(tau, s)
        upd = cand < best
        best = np.where(upd, cand, best)
        best_tau = np.where(upd, tau, best_tau)
    return best, best_tau


@dataclass
class _ScaleIndex:
    """Particionamento curto/longo das células e árvore KD para uma escala a."""
    scale: float
    long_ids: np.ndarray
    short_tree: Optional[cKDTree]
    short_ids: np.ndarray
    radius: float


@dataclass
class CoverSet:
    """
    Recobrimento 𝒪_{ε,ε₁}: rede por carta, molduras por célula e setores.

    Os tubos não são materializados; são avaliados sob demanda em
    `contains_batch` para qualquer escala a (ε₁ ou C_*ε₁).
    """
    domain: Domain
    params: CoverParams
    n_eps: int
    l_eps: int
    cell_chart: np.ndarray
    cell_ij: np.ndarray
    cell_xi: np.ndarray
    center: np.ndarray
    normal: np.ndarray
    xhat1: np.ndarray
    xhat2: np.ndarray
    _indices: Dict[float, _ScaleIndex] = field(default_factory=dict, repr=False)

    @property
    def cell_count(self) -> int:
        return len(self.cell_chart)

    @property
    def sector_count(self) -> int:
        return self.l_eps + 1

    @property
    def cells_per_chart(self) -> int:
        return (2 * self.n_eps + 1) ** 2

    def frame_error(self) -> float:
        """Maior desvio de ortonormalidade das molduras (x̂₁, x̂₂, n_c)."""
        frames = np.stack([self.xhat1, self.xhat2, self.normal], axis=2)
        gram = np.einsum("nki,nkj->nij", frames, frames)
        return float(np.max(np.abs(gram - np.eye(3))))

    @cached_property
    def _chart_frames(self) -> Tuple[np.ndarray, np.ndarray]:
        return chart_arrays(self.domain)

    def rect_bounds(self, cells: np.ndarray, scale: float) -> Tuple[np.ndarray, np.ndarray]:
        """Retângulo 𝓡 ∩ 𝒜 da célula em coordenadas da carta."""
        half = self.domain.delta * (1.0 - 1e-9)
        lo = np.maximum(self.cell_xi[cells] - scale, -half)
        hi = np.minimum(self.cell_xi[cells] + scale, half)
        return lo, hi

    def launch_radius(self, scale: float) -> float:
        """Raio (mundo) que contém todo ponto de lançamento a partir do centro."""
        return math.sqrt(2.0) * scale * SLOPE_FACTOR * 1.01

    def index(self, scale: float) -> _ScaleIndex:
        key = float(scale)
        if key not in self._indices:
            self._indices[key] = self._build_index(key)
        return self._indices[key]

    def _build_index(self, scale: float) -> _ScaleIndex:
        shape = self.domain.shape
        cells = np.arange(self.cell_count)
        lo, hi = self.rect_bounds(cells, scale)
        kappa_min = np.full(self.cell_count, np.inf)
        for a in (0.0, 0.5, 1.0):
            for b in (0.0, 0.5, 1.0):
                xi = lo + np.array([a, b]) * (hi - lo)
                y = graph_points(self.domain, self.cell_chart, xi)
                kappa_min = np.minimum(kappa_min, self._min_curvature(y))
        margin = 0.05 * self.domain.c_eta
        long_mask = kappa_min < margin
        short_ids = cells[~long_mask]
        radius = self.launch_radius(scale) + self.params.eps + scale
        tree = None
        if len(short_ids):
            shifts = shape.periodic_shifts()
            pts = np.concatenate([self.center[short_ids] + s for s in shifts])
            tree = cKDTree(pts)
            short_ids = np.tile(short_ids, len(shifts))
        logger.debug(
            f"Escala a={scale:.4g}: {int(long_mask.sum())} células longas, "
            f"{int((~long_mask).sum())} curtas"
        )
        return _ScaleIndex(scale=scale, long_ids=cells[long_mask], short_tree=tree, short_ids=short_ids, radius=radius)

    def _min_curvature(self, y: np.ndarray) -> np.ndarray:
        """Menor curvatura normal em y (autovalor mínimo da segunda forma tangente)."""
        shape = self.domain.shape
        g = shape.grad(y)
        gn = np.linalg.norm(g, axis=1)
        t1, t2 = _tangent_pair(g / gn[:, None])
        h = shape.hessian(y)
        a11 = np.einsum("ni,nij,nj->n", t1, h, t1) / gn
        a22 = np.einsum("ni,nij,nj->n", t2, h, t2) / gn
        a12 = np.einsum("ni,nij,nj->n", t1, h, t2) / gn
        return 0.5 * (a11 + a22) - np.sqrt(0.25 * (a11 - a22) ** 2 + a12 ** 2)

    def wrap_positions(self, x: np.ndarray) -> np.ndarray:
        shape = self.domain.shape
        return shape.center + shape.wrap(np.atleast_2d(x) - shape.center)


def build_cover(domain: Domain, params: CoverParams) -> CoverSet:
    """
    Constrói a rede, as molduras e os contadores do recobrimento.

    Raises:
        EpsTooLarge: Se ε₁ > δ/4 (a rede degenera)
        CoverError: Se o domínio não tiver forma implícita
    """
    if domain.shape is None:
        raise CoverError("Recobrimento exige um domínio com forma implícita")
    if params.eps1 > domain.delta / 4.0:
        raise EpsTooLarge(f"ε₁ = {params.eps1} maior que δ/4 = {domain.delta / 4.0}")
    started = time.perf_counter()
    n_eps = int(math.ceil(domain.delta / params.eps))
    l_eps = int(math.ceil(2.0 * math.pi / params.eps))

    idx = np.arange(-n_eps, n_eps + 1)
    gi, gj = np.meshgrid(idx, idx, indexing="ij")
    ij = np.column_stack([gi.ravel(), gj.ravel()])
    m = len(domain.charts)
    cell_chart = np.repeat(np.arange(m), len(ij))
    cell_ij = np.tile(ij, (m, 1))
    cell_xi = params.eps * cell_ij.astype(float)

    half = domain.delta * (1.0 - 1e-9)
    frame_xi = np.clip(cell_xi, -half, half)
    center = graph_points(domain, cell_chart, frame_xi)
    _, frames = chart_arrays(domain)
    fr = frames[cell_chart]
    g = domain.implicit_shape.grad(center)
    normal = g / np.linalg.norm(g, axis=1)[:, None]
    g_local = np.einsum("na,nai->ni", g, fr)
    tau1, tau2 = tangent_basis_local(-g_local[:, :2] / g_local[:, 2:3])
    xhat1 = np.einsum("nij,nj->ni", fr, tau1)
    xhat2 = np.einsum("nij,nj->ni", fr, tau2)

    cover = CoverSet(
        domain=domain,
        params=params,
        n_eps=n_eps,
        l_eps=l_eps,
        cell_chart=cell_chart,
        cell_ij=cell_ij,
        cell_xi=cell_xi,
        center=center,
        normal=normal,
        xhat1=xhat1,
        xhat2=xhat2,
    )
    logger.info(
        f"Recobrimento: {cover.cell_count} células (N_ε={n_eps}, L_ε={l_eps}), "
        f"ε={params.eps}, ε₁={params.eps1} ({time.perf_counter() - started:.2f}s)"
    )
    return cover


def _sector_window(cover: CoverSet, cells: np.ndarray, v: np.ndarray, scale: float):
    """
    Condição de setor e janela θ (centro, meia-largura) da união dos setores admissíveis.

    Returns:
        (admissível, centro, meia-largura)
    """
    eps = cover.params.eps
    speed = np.linalg.norm(v, axis=-1)
    vn = (v * cover.normal[cells]).sum(axis=-1)
    sector = np.abs(vn) <= 8.0 * cover.domain.c_eta * scale * np.maximum(1.0, speed) + 1e-12 * speed
    theta_v = np.arctan2((v * cover.xhat2[cells]).sum(axis=-1), (v * cover.xhat1[cells]).sum(axis=-1))
    theta_v = np.mod(theta_v, 2.0 * np.pi)
    l_lo = np.maximum(np.floor((theta_v - scale) / eps) + 1, 0)
    l_hi = np.minimum(np.ceil((theta_v + scale) / eps) - 1, cover.l_eps)
    ok = sector & (l_lo <= l_hi)
    center = 0.5 * eps * (l_lo + l_hi)
    half = 0.5 * eps * (l_hi - l_lo) + scale
    return ok, center, half


def _tube_eval(cover: CoverSet, x, cells, xi, wc, wh, t_max):
    """Distância de x ao raio lançado de y(ξ) na direção θ* (mais próxima de x dentro da janela)."""
    shape = cover.domain.shape
    y = graph_points(cover.domain, cover.cell_chart[cells], xi)
    g = shape.grad(y)
    n_y = g / np.linalg.norm(g, axis=1)[:, None]
    d = shape.wrap(x - y)
    e1, e2, nc = cover.xhat1[cells], cover.xhat2[cells], cover.normal[cells]
    theta = np.arctan2((d * e2).sum(axis=1), (d * e1).sum(axis=1))
    theta = wc + np.clip(_wrap_angle(theta - wc), -wh, wh)
    w0 = np.cos(theta)[:, None] * e1 + np.sin(theta)[:, None] * e2
    lift = -(w0 * n_y).sum(axis=1) / (nc * n_y).sum(axis=1)
    w = w0 + lift[:, None] * nc
    w /= np.linalg.norm(w, axis=1)[:, None]
    dist, tau = _box_ls(d, w, nc, t_max, cover.params.eps)
    return dist, tau, y, w


def _short_pairs(cover: CoverSet, x: np.ndarray, scale: float):
    index = cover.index(scale)
    if index.short_tree is None:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    hits = index.short_tree.query_ball_point(x, r=index.radius)
    q = np.concatenate([np.full(len(h), i, dtype=int) for i, h in enumerate(hits)]) if len(hits) else np.zeros(0, int)
    c = np.concatenate([np.asarray(h, dtype=int) for h in hits]) if len(hits) else np.zeros(0, int)
    return q, index.short_ids[c] if len(c) else c


def _short_distance(cover: CoverSet, x, v, q, cells, scale):
    """Distância ao tubo curto pela projeção de x no retângulo da célula."""
    ok, wc, wh = _sector_window(cover, cells, v[q], scale)
    q, cells, wc, wh = q[ok], cells[ok], wc[ok], wh[ok]
    if len(q) == 0:
        return q, np.zeros(0)
    origins, frames = cover._chart_frames
    ch = cover.cell_chart[cells]
    rel = cover.domain.shape.wrap(x[q] - origins[ch])
    xi = np.einsum("ni,nij->nj", rel, frames[ch])[:, :2]
    lo, hi = cover.rect_bounds(cells, scale)
    xi = np.clip(xi, lo, hi)
    dist, _, _, _ = _tube_eval(cover, x[q], cells, xi, wc, wh, np.zeros(len(q)))
    return q, dist


def _long_candidates(cover: CoverSet, x, v, scale):
    """Pares (consulta, célula longa) que sobrevivem ao pré-filtro, com uma cota inferior."""
    index = cover.index(scale)
    cells = index.long_ids
    if len(cells) == 0 or len(x) == 0:
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0), np.zeros(0), np.zeros(0)
    eps = cover.params.eps
    r_launch = cover.launch_radius(scale)
    tilt = 2.0 * cover.domain.c_eta * r_launch
    out_q, out_c, out_lb, out_wc, out_wh = [], [], [], [], []
    for start in range(0, len(x), QUERY_BLOCK):
        xs = x[start:start + QUERY_BLOCK]
        vs = v[start:start + QUERY_BLOCK]
        nq = len(xs)
        cc = np.broadcast_to(cells, (nq, len(cells)))
        ok, wc, wh = _sector_window(cover, cc, vs[:, None, :], scale)
        d = cover.domain.shape.wrap(xs[:, None, :] - cover.center[cells][None, :, :])
        dn = (d * cover.normal[cells][None]).sum(axis=-1)
        d1 = (d * cover.xhat1[cells][None]).sum(axis=-1)
        d2 = (d * cover.xhat2[cells][None]).sum(axis=-1)
        dt = np.hypot(d1, d2)
        gap = np.maximum(np.abs(_wrap_angle(np.arctan2(d2, d1) - wc)) - wh, 0.0)
        lateral = np.where(gap < 0.5 * np.pi, dt * np.sin(gap), dt)
        lb = np.hypot(dn, lateral) - (r_launch + eps + tilt * np.linalg.norm(d, axis=-1))
        keep = ok & (lb < scale)
        qi, ki = np.nonzero(keep)
        out_q.append(qi + start)
        out_c.append(cells[ki])
        out_lb.append(lb[qi, ki])
        out_wc.append(wc[qi, ki])
        out_wh.append(wh[qi, ki])
    return (
        np.concatenate(out_q),
        np.concatenate(out_c),
        np.concatenate(out_lb),
        np.concatenate(out_wc),
        np.concatenate(out_wh),
    )


def _long_distance(cover: CoverSet, x, q, cells, wc, wh, scale):
    """Busca em grade com zoom no lançamento; t_f traçado apenas no melhor lançamento."""
    if len(q) == 0:
        return np.zeros(0)
    diam = cover.domain.diam
    lo, hi = cover.rect_bounds(cells, scale)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    k = ZOOM_GRID
    offsets = np.linspace(-1.0, 1.0, k)
    o1, o2 = np.meshgrid(offsets, offsets, indexing="ij")
    offsets = np.column_stack([o1.ravel(), o2.ravel()])
    p = len(q)
    cap = np.full(p * len(offsets), 2.0 * diam)
    for _ in range(ZOOM_LEVELS):
        xi = (mid[:, None, :] + half[:, None, :] * offsets[None, :, :]).reshape(-1, 2)
        xi = np.clip(xi, np.repeat(lo, len(offsets), axis=0), np.repeat(hi, len(offsets), axis=0))
        rep = np.repeat(np.arange(p), len(offsets))
        dist, _, _, _ = _tube_eval(cover, x[q[rep]], cells[rep], xi, wc[rep], wh[rep], cap)
        best = np.argmin(dist.reshape(p, -1), axis=1)
        mid = xi.reshape(p, -1, 2)[np.arange(p), best]
        half = half / 3.0

    dist, tau, y, w = _tube_eval(cover, x[q], cells, mid, wc, wh, np.full(p, 2.0 * diam))
    reach = trace_exits(cover.domain, y, w, forward=True).t
    reach = np.where(np.isfinite(reach), reach, 2.0 * diam)
    short = tau > reach
    if np.any(short):
        rows = np.nonzero(short)[0]
        dist[rows], _, _, _ = _tube_eval(cover, x[q[rows]], cells[rows], mid[rows], wc[rows], wh[rows], reach[rows])
    return dist


def contains_batch(
    cover: CoverSet,
    x: np.ndarray,
    v: np.ndarray,
    scale: Optional[float] = None,
    exhaustive: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pertinência a 𝒪_{ε,a} em lote (a = ε₁ por padrão).

    Args:
        exhaustive: Calcula a distância mínima a todos os tubos candidatos em
            vez de parar no primeiro tubo que contém o ponto

    Returns:
        (pertence (n,), menor distância de tubo encontrada (n,))
    """
    scale = cover.params.eps1 if scale is None else float(scale)
    x = cover.wrap_positions(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    n = len(x)
    best = np.full(n, np.inf)

    q, cells = _short_pairs(cover, x, scale)
    if len(q):
        q, dist = _short_distance(cover, x, v, q, cells, scale)
        np.minimum.at(best, q, dist)

    pending = np.arange(n) if exhaustive else np.nonzero(best >= scale)[0]
    if len(pending):
        lq, lc, lb, wc, wh = _long_candidates(cover, x[pending], v[pending], scale)
        order = np.lexsort((lb, lq))
        lq, lc, lb, wc, wh = lq[order], lc[order], lb[order], wc[order], wh[order]
        rank = np.arange(len(lq)) - np.searchsorted(lq, lq)
        max_rank = int(rank.max()) + 1 if len(rank) else 0
        for r0 in range(0, max_rank, ROUND_SIZE):
            # pares cuja cota inferior não melhora a consulta ficam de fora
            current = best[pending[lq]]
            bound = current if exhaustive else np.where(current < scale, -np.inf, scale)
            sel = (rank >= r0) & (rank < r0 + ROUND_SIZE) & (lb < bound)
            if not np.any(sel):
                continue
            rows = np.nonzero(sel)[0]
            dist = _long_distance(cover, x[pending], lq[rows], lc[rows], wc[rows], wh[rows], scale)
            np.minimum.at(best, pending[lq[rows]], dist)

    slow = np.linalg.norm(v, axis=1) < scale
    return slow | (best < scale), best


def cover_contains(cover: CoverSet, p: PhasePoint, scale: Optional[float] = None) -> bool:
    """(x, v) ∈ 𝒪_{ε,a}: |v| < a ou x a distância < a de um tubo com v no setor correspondente."""
    member, _ = contains_batch(cover, p.x[None, :], p.v[None, :], scale)
    return bool(member[0])


def check_tiling(cover: CoverSet, grid: int = 100) -> float:
    """Fração de pontos de uma grade de 𝒜 cobertos pela união dos retângulos de uma carta."""
    delta = cover.domain.delta
    a = np.linspace(-delta, delta, grid + 2)[1:-1]
    g1, g2 = np.meshgrid(a, a, indexing="ij")
    pts = np.column_stack([g1.ravel(), g2.ravel()])
    eps, scale = cover.params.eps, cover.params.eps1
    nearest = np.clip(np.round(pts / eps), -cover.n_eps, cover.n_eps)
    covered = np.all(np.abs(pts - eps * nearest) < scale, axis=1)
    return float(covered.mean())


def check_inclusion(cover: CoverSet, samples: SingularSampleSet, threads: Optional[int] = None) -> Dict[str, float]:
    """Fração das amostras de 𝔖_B contidas em 𝒪_{ε,ε₁} (alvo: 1)."""
    member, dist = contains_batch(cover, samples.x, samples.v)
    misses = np.nonzero(~member)[0]
    if len(misses):
        logger.warning(f"{len(misses)} amostras de 𝔖_B fora do recobrimento; distâncias: {dist[misses][:5].tolist()}")
    return {"n": len(samples), "fraction": float(member.mean()) if len(samples) else 1.0, "misses": int(len(misses))}


def check_nesting(cover: CoverSet, samples: SingularSampleSet, n: int, seed: int) -> Dict[str, float]:
    """
    Pontos de 𝒪_{ε,ε₁} a até ε₁/10 da sua fronteira devem pertencer a 𝒪_{ε,C_*ε₁}.

    Candidatos: amostras de 𝔖_B perturbadas no espaço de fase; ficam os que têm
    distância de tubo em [0,9ε₁, ε₁).
    """
    eps1 = cover.params.eps1
    if len(samples) == 0:
        return {"n_tested": 0, "violations": 0}
    rng = stream(seed, "cover_nesting")
    pick = rng.integers(0, len(samples), n)
    direction = rng.standard_normal((n, 6))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    radius = eps1 * rng.uniform(0.5, 1.5, n)
    pert = samples.phase[pick] + radius[:, None] * direction
    member, dist = contains_batch(cover, pert[:, :3], pert[:, 3:], exhaustive=True)
    near = member & (dist >= 0.9 * eps1) & (dist < eps1)
    tested = np.nonzero(near)[0]
    violations = 0
    if len(tested):
        wide, _ = contains_batch(cover, pert[tested, :3], pert[tested, 3:], scale=cover.params.c_star * eps1)
        violations = int((~wide).sum())
    return {"n_tested": int(len(tested)), "violations": violations}


def _gaussian_tail(theta: float, v_max: float) -> float:
    """∫_{|v|>V} e^{−θ|v|²} dv em ℝ³."""
    a = math.sqrt(theta) * v_max
    return float(
        4.0 * math.pi * (v_max * math.exp(-a * a) / (2.0 * theta) + math.sqrt(math.pi) * erfc(a) / (4.0 * theta ** 1.5))
    )


def estimate_cover_measure(cover: CoverSet, n: int, seed: int, threads: Optional[int] = None) -> Dict[str, float]:
    """
    ∬ 1_{𝒪_{ε,C_*ε}} e^{−θ|v|²} dv dx por Monte Carlo uniforme em Ω × B(0, V_max).

    A cauda gaussiana além de V_max entra como cota separada.
    """
    params = cover.params
    scale = params.c_star * params.eps
    volume, _ = volume_estimate(cover.domain, seed=seed)
    ball = 4.0 / 3.0 * math.pi * params.v_max ** 3

    def run(chunk: Chunk) -> np.ndarray:
        x, v = sample_rays(cover.domain, chunk.size, chunk.rng, params.v_max)
        member, _ = contains_batch(cover, x, v, scale)
        return member * volume * ball * np.exp(-params.theta_w * (v ** 2).sum(axis=1))

    values = np.concatenate(map_chunks(run, n, seed, "cover_measure", threads=threads))
    low = volume * 4.0 * math.pi * scale ** 3 / 3.0
    return {
        "estimate": float(values.mean()),
        "std_error": float(values.std(ddof=1) / math.sqrt(len(values))),
        "tail_bound": volume * _gaussian_tail(params.theta_w, params.v_max),
        "low_speed_part": low,
        "n": int(len(values)),
    }


def estimate_boundary_measure(cover: CoverSet, n: int, seed: int, threads: Optional[int] = None) -> Dict[str, float]:
    """∫_{γ₋} 1_{𝒪_{ε,C_*ε}} |n·v| e^{−θ|v|²} com pesos de área e v uniforme na meia-bola de entrada."""
    params = cover.params
    scale = params.c_star * params.eps

    def run(chunk: Chunk) -> np.ndarray:
        pts = boundary_phase_samples(cover.domain, chunk.size, chunk.rng, params.v_max)
        member, _ = contains_batch(cover, pts["x"], pts["v"], scale)
        weight = pts["weight"] * np.abs(pts["vn"]) * np.exp(-params.theta_w * (pts["v"] ** 2).sum(axis=1))
        return member * weight

    values = np.concatenate(map_chunks(run, n, seed, "boundary_measure", threads=threads))
    area, _ = surface_area_estimate(cover.domain, seed=seed)
    return {
        "estimate": float(values.mean()),
        "std_error": float(values.std(ddof=1) / math.sqrt(len(values))),
        "low_speed_part": float(area * math.pi * scale ** 4 / 4.0),
        "n": int(len(values)),
    }


def check_distance(cover: CoverSet, samples: SingularSampleSet, n: int, seed: int, threads: Optional[int] = None) -> Dict[str, float]:
    """Menor distância de fase entre pontos fora de 𝒪_{ε,C_*ε} e as amostras de 𝔖_B."""
    params = cover.params
    scale = params.c_star * params.eps
    index = SingularIndex(samples) if len(samples) else None

    def run(chunk: Chunk) -> Tuple[float, int]:
        x, v = sample_rays(cover.domain, chunk.size, chunk.rng, params.v_max)
        member, _ = contains_batch(cover, x, v, scale)
        outside = ~member
        if index is None or not np.any(outside):
            return float("inf"), int(outside.sum())
        d, _ = index.distance(np.hstack([x[outside], v[outside]]))
        return float(d.min()), int(outside.sum())

    results = map_chunks(run, n, seed, "cover_distance", threads=threads)
    min_dist = min(r[0] for r in results)
    return {
        "min_distance": min_dist,
        "ratio": min_dist / params.eps if math.isfinite(min_dist) else float("inf"),
        "n_outside": int(sum(r[1] for r in results)),
    }


def check_cone_bound(cover: CoverSet, n: int, seed: int, threads: Optional[int] = None) -> Dict[str, Any]:
    """
    Lema do cone em pontos de fronteira centrais (|ξ| ≤ δ/2 na carta).

    Entre as amostras em 𝒪_{ε,C_*ε} com |v| ≥ ε^{1/3}, conta as que violam
    |n₀·v̂| ≤ C₄√ε (n₀ = normal na origem da carta). As direções vêm de três
    famílias em partes iguais: tangentes exatas em x, quase rasantes em
    relação a n₀ e, quando s_*C₂√ε ≤ 1, a faixa da hipótese
    −1 ≤ n₀·v̂ ≤ −s_*C₂√ε. Sem essa faixa a terceira família vira quase
    rasante e `hypothesis_applicable` é falso.
    """
    params = cover.params
    domain = cover.domain
    consts = cone_constants(params)
    scale = params.c_star * params.eps
    root = math.sqrt(params.eps)
    bound = consts["C4"] * root
    band_top = -params.s_star * consts["C2"] * root
    applicable = band_top >= -1.0
    _, frames = chart_arrays(domain)
    origin_normals = -frames[:, :, 2]
    slow = params.eps ** (1.0 / 3.0)

    def run(chunk: Chunk) -> np.ndarray:
        rng = chunk.rng
        size = chunk.size
        pts = boundary_from_uniform(domain, rng.random((size, 3)))
        n0 = origin_normals[pts["chart_id"]]
        family = rng.integers(0, 3, size)
        if not applicable:
            family = np.where(family == 2, 1, family)
        phi = rng.uniform(0.0, 2.0 * np.pi, size)
        u = rng.random(size)

        t1, t2 = _tangent_pair(pts["normal"])
        tangent = np.cos(phi)[:, None] * t1 + np.sin(phi)[:, None] * t2
        s1, s2 = _tangent_pair(n0)
        near = -min(1.0, 4.0 * bound) * u
        band = -1.0 + (min(band_top, 0.0) + 1.0) * u
        sin_a = np.where(family == 2, band, near)
        cos_a = np.sqrt(np.maximum(1.0 - sin_a ** 2, 0.0))
        prescribed = cos_a[:, None] * (np.cos(phi)[:, None] * s1 + np.sin(phi)[:, None] * s2) + sin_a[:, None] * n0
        unit = np.where((family == 0)[:, None], tangent, prescribed)
        speed = slow + (params.v_max - slow) * rng.random(size)

        rows = np.nonzero(np.max(np.abs(pts["xi"]), axis=1) <= 0.5 * domain.delta)[0]
        if len(rows) == 0:
            return np.zeros(4, dtype=int)
        alignment = (unit[rows] * n0[rows]).sum(axis=1)
        member, _ = contains_batch(cover, pts["x"][rows], unit[rows] * speed[rows, None], scale)
        hypothesis = (alignment >= -1.0) & (alignment <= band_top)
        violating = member & (np.abs(alignment) > bound)
        return np.array([member.sum(), violating.sum(), hypothesis.sum(), (member & hypothesis).sum()])

    totals = np.sum(map_chunks(run, n, seed, "cone_bound", threads=threads), axis=0)
    tested, violations, in_band, band_members = (int(t) for t in totals)
    if violations:
        logger.warning(f"Lema do cone: {violations}/{tested} membros com |n₀·v̂| > C₄√ε = {bound:.3g}")
    return {
        "n_tested": tested,
        "violations": violations,
        "violation_fraction": violations / tested if tested else 0.0,
        "bound": bound,
        "hypothesis_applicable": applicable,
        "n_hypothesis": in_band,
        "hypothesis_members": band_members,
        **consts,
    }
