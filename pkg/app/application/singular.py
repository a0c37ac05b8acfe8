"""
Conjunto singular 𝔖_B: parametrização, normal 𝒩, certificado de codimensão 1 e amostragem.

Parametrização de uma carta:
    X = b(x₁,x₂) + s·r_v·ŵ,  V = r_v·ŵ,  ŵ = cos θ·τ₁ + sin θ·τ₂
com b o ponto do gráfico e τ₁, τ₂ a base tangente da carta.
"""
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from app.application.geometry import boundary_distance, boundary_from_uniform, chart_arrays, second_form_batch
from app.application.raytrace import trace_exits
from app.core.exceptions import EmptySampleSet, NoGrazingDirections, OutOfPatch, RayLeavesChart
from app.core.parallel import map_chunks
from app.core.rng import Chunk
from app.core.settings import settings
from app.domain.charts import tangent_basis_jacobian, tangent_basis_local
from app.domain.models import Domain, PhasePoint, SingularPatchParams, SingularSampleSet

logger = logging.getLogger(__name__)

CURVATURE_TOL = 1e-9
RESIDUAL_TOL = 1e-6
# piso de r_v: s = comprimento/r_v fica limitado por diam/MIN_SPEED
MIN_SPEED = 1e-3
LAUNCH_WINDOW = (0.02, 0.98)


def _launch_frame(domain: Domain, p: SingularPatchParams):
    chart = domain.charts[p.chart_id]
    xi = np.array([[p.x1, p.x2]])
    if not chart.in_patch(xi)[0]:
        raise OutOfPatch(f"(x₁, x₂) = ({p.x1:.4g}, {p.x2:.4g}) fora de (−δ, δ)² da carta {p.chart_id}")
    base = chart.graph_point(xi)[0]
    tau1, tau2 = chart.tangent_frame(xi)
    w = np.cos(p.theta) * tau1[0] + np.sin(p.theta) * tau2[0]
    return chart, base, w


def singular_param(domain: Domain, p: SingularPatchParams) -> PhasePoint:
    """
    (X, V) para parâmetros de carta.

    Em lançamentos estritamente não convexos s deve ficar abaixo do tempo de
    saída para frente do raio tangencial; em lançamentos convexos só s = 0 é
    admissível; lançamentos planos não têm restrição.

    Raises:
        OutOfPatch: Se (x₁, x₂) estiver fora da carta
        RayLeavesChart: Se o raio tangencial sair de Ω antes de s
    """
    chart, base, w = _launch_frame(domain, p)
    v = p.r_v * w
    x = base + p.s * v
    if domain.shape is not None and p.s > 0 and p.r_v > 0:
        kappa = second_form_batch(domain, base[None, :], w[None, :])[0]
        if kappa > CURVATURE_TOL:
            raise RayLeavesChart(f"Lançamento convexo (κ = {kappa:.3e}) só admite s = 0")
        if kappa < -CURVATURE_TOL:
            t_f = trace_exits(domain, base[None, :], v[None, :], forward=True).t[0]
            if p.s > t_f * (1.0 + 1e-8):
                raise RayLeavesChart(f"s = {p.s:.6g} além de t_f = {t_f:.6g}")
    return PhasePoint(x=x, v=v)


def singular_derivatives(domain: Domain, p: SingularPatchParams) -> np.ndarray:
    """
    Matriz 5×6 das derivadas analíticas ∂(X, V)/∂(x₁, x₂, θ, r_v, s).

    Raises:
        OutOfPatch: Se (x₁, x₂) estiver fora da carta
    """
    chart, _, _ = _launch_frame(domain, p)
    xi = np.array([[p.x1, p.x2]])
    grad = chart.grad_eta(xi)
    hess = chart.hessian_eta(xi)[0]
    tau1, tau2 = tangent_basis_local(grad)
    dtau1, dtau2 = tangent_basis_jacobian(grad)
    c, s_ = np.cos(p.theta), np.sin(p.theta)
    w = c * tau1[0] + s_ * tau2[0]
    w_theta = -s_ * tau1[0] + c * tau2[0]
    frame = chart.frame

    rows = []
    for i in range(2):
        # ∂ᵢτⱼ = Σ_k ∂τⱼ/∂p_k · ∂_k∂ᵢη
        d_w = c * (dtau1[0] @ hess[:, i]) + s_ * (dtau2[0] @ hess[:, i])
        d_base = np.zeros(3)
        d_base[i] = 1.0
        d_base[2] = grad[0, i]
        rows.append(np.concatenate([
            frame @ (d_base + p.s * p.r_v * d_w),
            frame @ (p.r_v * d_w),
        ]))
    rows.append(np.concatenate([frame @ (p.s * p.r_v * w_theta), frame @ (p.r_v * w_theta)]))
    rows.append(np.concatenate([frame @ (p.s * w), frame @ w]))
    rows.append(np.concatenate([frame @ (p.r_v * w), np.zeros(3)]))
    return np.array(rows)


def generalized_cross(m: np.ndarray) -> np.ndarray:
    """
    Produto vetorial generalizado das 5 linhas de m (5×6).

    𝒩_k = (−1)^(k+1)·det(m sem a coluna k), k = 0..5; ortogonal a cada linha.
    """
    out = np.empty(6)
    for k in range(6):
        minor = np.delete(m, k, axis=1)
        out[k] = (-1) ** (k + 1) * np.linalg.det(minor)
    return out


def singular_normal(domain: Domain, p: SingularPatchParams) -> np.ndarray:
    """
    Normal 𝒩 ∈ ℝ⁶ de 𝔖_B no ponto de parâmetros p.

    Numa carta com ∇η = 0 e θ = 0 vale 𝒩 = (0, 0, −r_v³∂₁₁η, 0, 0, s·r_v³∂₁₁η);
    anula-se em cartas planas.
    """
    return generalized_cross(singular_derivatives(domain, p))


def codim_certificate(domain: Domain, p: SingularPatchParams) -> Dict[str, float]:
    """|𝒩| e o menor valor singular da matriz de derivadas com linhas normalizadas."""
    m = singular_derivatives(domain, p)
    norms = np.linalg.norm(m, axis=1)
    scaled = m / np.where(norms > 0, norms, 1.0)[:, None]
    sigma = np.linalg.svd(scaled, compute_uv=False)
    return {
        "normal_norm": float(np.linalg.norm(generalized_cross(m))),
        "min_singular_value": float(sigma.min()),
    }


def _tangent_bases(domain: Domain, x: np.ndarray, chart_ids: np.ndarray):
    """τ₁, τ₂ em coordenadas do mundo para pontos de fronteira, pela moldura de cada carta."""
    _, frames = chart_arrays(domain)
    fr = frames[chart_ids]
    g = np.einsum("na,nai->ni", domain.implicit_shape.grad(x), fr)
    grad_eta = -g[:, :2] / g[:, 2:3]
    tau1, tau2 = tangent_basis_local(grad_eta)
    return np.einsum("nij,nj->ni", fr, tau1), np.einsum("nij,nj->ni", fr, tau2)


def _sample_chunk(domain: Domain, chunk: Chunk, v_max: float) -> SingularSampleSet:
    rng = chunk.rng
    diam = domain.diam
    lo, hi = LAUNCH_WINDOW
    parts: List[Dict[str, np.ndarray]] = []
    need = chunk.size
    for _ in range(50):
        if need <= 0:
            break
        m = max(2 * need, 8)
        pts = boundary_from_uniform(domain, rng.random((m, 3)))
        base, cid, xi = pts["x"], pts["chart_id"], pts["xi"]
        theta = rng.uniform(0.0, 2.0 * np.pi, m)
        r_v = MIN_SPEED + (v_max - MIN_SPEED) * rng.random(m)
        u = rng.random(m)
        tau1, tau2 = _tangent_bases(domain, base, cid)
        w = np.cos(theta)[:, None] * tau1 + np.sin(theta)[:, None] * tau2
        kappa = second_form_batch(domain, base, w)

        length = np.zeros(m)
        keep = np.ones(m, dtype=bool)
        flat = np.abs(kappa) <= CURVATURE_TOL
        length[flat] = u[flat] * diam
        concave = kappa < -CURVATURE_TOL
        if np.any(concave):
            rows = np.nonzero(concave)[0]
            reach = trace_exits(domain, base[rows], w[rows], forward=True).t
            frac = lo + (hi - lo) * u[rows]
            length[rows] = frac * reach
            keep[rows] = np.isfinite(reach) & (reach >= 1e-3 * diam)

        x = base + length[:, None] * w
        if np.any(concave):
            rows = np.nonzero(concave & keep)[0]
            keep[rows] = boundary_distance(domain, x[rows]) >= 1e3 * settings.tol_hit * diam

        take = np.nonzero(keep)[0][:need]
        parts.append({
            "x": x[take],
            "v": r_v[take, None] * w[take],
            "chart_id": cid[take],
            "xi": xi[take],
            "theta": theta[take],
            "r_v": r_v[take],
            "s": length[take] / r_v[take],
        })
        need -= len(take)

    merged = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]} if parts else {}
    if not merged or len(merged["x"]) == 0:
        return SingularSampleSet(
            x=np.zeros((0, 3)), v=np.zeros((0, 3)), chart_id=np.zeros(0, dtype=int), xi=np.zeros((0, 2)),
            theta=np.zeros(0), r_v=np.zeros(0), s=np.zeros(0), residual=np.zeros(0),
        )
    back = trace_exits(domain, merged["x"], merged["v"])
    with np.errstate(invalid="ignore"):
        residual = np.abs(back.speed_normal) / np.maximum(merged["r_v"], settings.tol_g)
    residual = np.where(np.isfinite(residual), residual, np.inf)
    # raios planos que nunca saem (placa) são rasantes por construção
    residual[np.isinf(back.t)] = 0.0
    return SingularSampleSet(residual=residual, **merged)


def _concat(sets: List[SingularSampleSet]) -> SingularSampleSet:
    fields = ("x", "v", "chart_id", "xi", "theta", "r_v", "s", "residual")
    return SingularSampleSet(**{f: np.concatenate([getattr(s, f) for s in sets]) for f in fields})


def sample_singular_set(
    domain: Domain,
    n: int,
    seed: int,
    v_max: Optional[float] = None,
    threads: Optional[int] = None,
    keep_failures: bool = False,
) -> SingularSampleSet:
    """
    Amostra n pontos de 𝔖_B restritos ao primeiro segmento de cada característica tangencial.

    Lançamentos convexos dão s = 0; não convexos s ∈ [0,02; 0,98]·t_f; planos
    um comprimento uniforme em [0, diam]. A rapidez r_v é uniforme em
    [MIN_SPEED, v_max] = [1e−3, v_max], não em (0, v_max]. Amostras cujo resíduo |n(x_b)·v|/|v|
    excede 1e−6 são registradas no log e descartadas (contadas em `failed`).

    Raises:
        NoGrazingDirections: Se nenhuma amostra puder ser gerada
    """
    if n < 1:
        raise ValueError("n deve ser >= 1")
    v_max = settings.v_max if v_max is None else float(v_max)
    sets = map_chunks(lambda c: _sample_chunk(domain, c, v_max), n, seed, "singular_set", threads=threads)
    samples = _concat(sets)
    if len(samples) == 0:
        raise NoGrazingDirections(f"Nenhuma direção rasante amostrável em {domain.kind}")
    bad = samples.residual >= RESIDUAL_TOL
    if np.any(bad):
        logger.warning(
            f"{int(bad.sum())}/{len(samples)} amostras de 𝔖_B reprovadas no resíduo; "
            f"maiores: {np.sort(samples.residual[bad])[-5:].tolist()}"
        )
    if keep_failures or not np.any(bad):
        return samples
    good = ~bad
    fields = ("x", "v", "chart_id", "xi", "theta", "r_v", "s", "residual")
    kept = SingularSampleSet(**{f: getattr(samples, f)[good] for f in fields})
    kept.failed = int(bad.sum())
    return kept


def audit_residuals(samples: SingularSampleSet, tol: float = RESIDUAL_TOL) -> Dict[str, float]:
    """Fração de amostras com resíduo de rasância abaixo de tol."""
    total = len(samples) + samples.failed
    passed = int((samples.residual < tol).sum())
    return {
        "n": total,
        "pass_fraction": passed / total if total else 0.0,
        "max_residual": float(samples.residual.max()) if len(samples) else 0.0,
    }


class SingularIndex:
    """Índice KD no espaço de fase sobre amostras de 𝔖_B."""

    def __init__(self, samples: SingularSampleSet):
        if len(samples) == 0:
            raise EmptySampleSet("Conjunto de amostras de 𝔖_B vazio")
        self.samples = samples
        self.tree = cKDTree(samples.phase)

    def distance(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(distâncias, índices) da amostra mais próxima de cada ponto (n, 6)."""
        d, idx = self.tree.query(np.atleast_2d(points), k=1)
        return np.asarray(d), np.asarray(idx)


def dist_to_singular(domain: Domain, p: PhasePoint, samples: SingularSampleSet) -> float:
    """
    Cota superior da distância de p a 𝔖_B: mínimo sobre as amostras.

    Raises:
        EmptySampleSet: Se não houver amostras
    """
    d, _ = SingularIndex(samples).distance(p.as_vector()[None, :])
    return float(d[0])


def codim_audit(domain: Domain, samples: SingularSampleSet, n: int = 1000) -> Dict[str, float]:
    """Certificado de codimensão 1 nos primeiros n lançamentos estritamente não convexos."""
    if len(samples) == 0:
        raise EmptySampleSet("Conjunto de amostras de 𝔖_B vazio")
    base = samples.x - samples.s[:, None] * samples.v
    w = samples.v / samples.r_v[:, None]
    kappa = second_form_batch(domain, base, w)
    rows = np.nonzero(kappa < -CURVATURE_TOL)[0][:n]
    norms = np.empty(len(rows))
    sigmas = np.empty(len(rows))
    for j, i in enumerate(rows):
        cert = codim_certificate(domain, samples.params(int(i)))
        norms[j] = cert["normal_norm"]
        sigmas[j] = cert["min_singular_value"]
    return {
        "n": int(len(rows)),
        "min_normal_norm": float(norms.min()) if len(rows) else float("nan"),
        "min_singular_value": float(sigmas.min()) if len(rows) else float("nan"),
    }
