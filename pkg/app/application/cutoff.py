"""
Molificador padrão φ_ε em ℝ⁶ e o corte χ_ε = 𝟙_{Ω̄×ℝ³∖𝒪_{ε,C_*ε}} * φ_ε.

φ(z) = C·exp(1/(|z|²−1)) em |z| < 1 com ∫φ = 1, φ_ε(z) = ρ⁻⁶ φ(z/ρ) e
ρ = ε/C̃. A convolução é estimada por Monte Carlo com amostras do próprio
núcleo (direção uniforme em S⁵, raio pela CDF radial tabelada); o gradiente
usa o estimador de escore ∇log φ_ε com variável de controle.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from app.application.cover import CoverSet, contains_batch
from app.application.geometry import boundary_phase_samples, volume_estimate
from app.application.raytrace import sample_rays
from app.core.parallel import map_chunks
from app.core.rng import Chunk, stream
from app.core.settings import settings
from app.domain.models import PhasePoint, SingularSampleSet

logger = logging.getLogger(__name__)

DIM = 6
SPHERE_AREA = math.pi ** 3
RADIAL_GRID = 4097
INNER_SAMPLES = 256


def _profile(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(1.0 / (r[inside] ** 2 - 1.0))
    return out


@lru_cache(maxsize=1)
def mollifier_norm_const() -> float:
    """C = 1/(|S⁵|·∫₀¹ r⁵ e^{1/(r²−1)} dr) com |S⁵| = π³."""
    radial, _ = quad(lambda r: r ** 5 * math.exp(1.0 / (r * r - 1.0)), 0.0, 1.0, epsabs=1e-14, epsrel=1e-12)
    return 1.0 / (SPHERE_AREA * radial)


@lru_cache(maxsize=1)
def _profile_slope_sup() -> float:
    r = np.linspace(0.0, 1.0, RADIAL_GRID)[:-1]
    slope = np.abs(_profile(r) * 2.0 * r / (r ** 2 - 1.0) ** 2)
    return float(mollifier_norm_const() * slope.max())


def mollifier_eval(eps: float, x: np.ndarray, v: np.ndarray, c_tilde: Optional[float] = None) -> np.ndarray:
    """φ_ε(x, v); zero fora de B(0; ε/C̃)."""
    c_tilde = settings.c_tilde_factor * settings.c_star if c_tilde is None else c_tilde
    rho = eps / c_tilde
    z = np.hstack([np.atleast_2d(x), np.atleast_2d(v)])
    r = np.linalg.norm(z, axis=1) / rho
    return mollifier_norm_const() * _profile(r) / rho ** DIM


@dataclass
class CutoffField:
    """Corte χ_ε associado a um recobrimento."""
    cover: CoverSet
    c_tilde: float
    mc_n: int
    norm_const: float

    @property
    def eps(self) -> float:
        return self.cover.params.eps

    @property
    def rho(self) -> float:
        return self.eps / self.c_tilde

    @property
    def scale(self) -> float:
        return self.cover.params.c_star * self.eps

    @cached_property
    def _radial_table(self) -> Tuple[np.ndarray, np.ndarray]:
        r = np.linspace(0.0, 1.0, RADIAL_GRID)
        cdf = cumulative_trapezoid(r ** 5 * _profile(r), r, initial=0.0)
        return cdf / cdf[-1], r

    def sample_kernel(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n deslocamentos z ~ φ_ε em ℝ⁶."""
        cdf, r = self._radial_table
        radius = np.interp(rng.random(n), cdf, r)
        direction = rng.standard_normal((n, DIM))
        direction /= np.linalg.norm(direction, axis=1)[:, None]
        return self.rho * radius[:, None] * direction

    def score(self, z: np.ndarray) -> np.ndarray:
        """∇log φ_ε(z) = −2w/(ρ(|w|²−1)²) com w = z/ρ."""
        w = z / self.rho
        q = (w ** 2).sum(axis=1)
        return -2.0 * w / (self.rho * (q - 1.0) ** 2)[:, None]

    def lipschitz_bound(self) -> float:
        """L = (6/ε)·C̃·sup|φ′|."""
        return DIM / self.eps * self.c_tilde * _profile_slope_sup()

    def indicator(self, points: np.ndarray) -> np.ndarray:
        """𝟙_{Ω̄×ℝ³∖𝒪_{ε,C_*ε}} em pontos (n, 6)."""
        points = np.atleast_2d(points)
        result = np.zeros(len(points))
        closed = self.cover.domain.implicit_shape.phi(points[:, :3]) <= 0
        rows = np.nonzero(closed)[0]
        if len(rows):
            member, _ = contains_batch(self.cover, points[rows, :3], points[rows, 3:], self.scale)
            result[rows] = (~member).astype(float)
        return result


def build_cutoff(cover: CoverSet, c_tilde: Optional[float] = None, mc_n: Optional[int] = None) -> CutoffField:
    """Cria o campo χ_ε com C̃ = c_tilde_factor·C_* por padrão."""
    c_tilde = settings.c_tilde_factor * cover.params.c_star if c_tilde is None else float(c_tilde)
    return CutoffField(cover=cover, c_tilde=c_tilde, mc_n=int(mc_n or settings.mc_n), norm_const=mollifier_norm_const())


def _shortcut(field: CutoffField, points: np.ndarray) -> np.ndarray:
    """Pontos cuja bola do núcleo cabe na componente de baixa velocidade (χ_ε = 0)."""
    return np.linalg.norm(points[:, 3:], axis=1) <= field.scale - field.rho


def _convolve(field: CutoffField, points: np.ndarray, m: int, rng: np.random.Generator, grad: bool):
    """χ_ε (e opcionalmente ∇χ_ε) em lote com m amostras de núcleo por ponto."""
    p = len(points)
    value = np.zeros(p)
    value_se = np.zeros(p)
    gradient = np.zeros((p, DIM))
    gradient_se = np.zeros((p, DIM))
    z = field.sample_kernel(p * m, rng).reshape(p, m, DIM)
    rows = np.nonzero(~_shortcut(field, points))[0]
    if len(rows) == 0:
        return value, value_se, gradient, gradient_se
    shifted = (points[rows, None, :] - z[rows]).reshape(-1, DIM)
    ind = field.indicator(shifted).reshape(len(rows), m)
    value[rows] = ind.mean(axis=1)
    value_se[rows] = ind.std(axis=1, ddof=1) / math.sqrt(m)
    if grad:
        s = field.score(z[rows].reshape(-1, DIM)).reshape(len(rows), m, DIM)
        centred = (ind - value[rows][:, None])[:, :, None] * s
        gradient[rows] = centred.mean(axis=1)
        gradient_se[rows] = centred.std(axis=1, ddof=1) / math.sqrt(m)
    return value, value_se, gradient, gradient_se


def cutoff_eval(field: CutoffField, p: PhasePoint, seed: int) -> Tuple[float, float]:
    """(χ_ε(x, v), erro-padrão) por convolução Monte Carlo."""
    value, se, _, _ = _convolve(field, p.as_vector()[None, :], field.mc_n, stream(seed, "cutoff_eval"), grad=False)
    return float(value[0]), float(se[0])


def cutoff_eval_batch(field: CutoffField, points: np.ndarray, seed: int, m: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """χ_ε em vários pontos de fase (n, 6)."""
    value, se, _, _ = _convolve(field, np.atleast_2d(points), int(m or field.mc_n), stream(seed, "cutoff_batch"), grad=False)
    return value, se


def cutoff_grad(field: CutoffField, p: PhasePoint, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """(∇ₓχ_ε, ∇ᵥχ_ε) como vetor de 6 componentes e os seus erros-padrão."""
    _, _, gradient, se = _convolve(field, p.as_vector()[None, :], field.mc_n, stream(seed, "cutoff_grad"), grad=True)
    return gradient[0], se[0]


def cutoff_grad_fd(field: CutoffField, p: PhasePoint, seed: int, step: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Diferenças centrais de χ_ε com números aleatórios comuns (passo ε/(10C̃) por padrão)."""
    h = field.rho / 10.0 if step is None else step
    base = p.as_vector()
    z = field.sample_kernel(field.mc_n, stream(seed, "cutoff_grad_fd"))
    gradient = np.zeros(DIM)
    se = np.zeros(DIM)
    for k in range(DIM):
        e = np.zeros(DIM)
        e[k] = h
        plus = field.indicator(base + e - z)
        minus = field.indicator(base - e - z)
        diff = (plus - minus) / (2.0 * h)
        gradient[k] = diff.mean()
        se[k] = diff.std(ddof=1) / math.sqrt(len(diff))
    return gradient, se


def mass_check(eps: float, n: int, seed: int, c_tilde: Optional[float] = None) -> Tuple[float, float]:
    """∬φ_ε por Monte Carlo uniforme na bola B(0; ε/C̃) ⊂ ℝ⁶."""
    c_tilde = settings.c_tilde_factor * settings.c_star if c_tilde is None else c_tilde
    rho = eps / c_tilde
    rng = stream(seed, "mollifier_mass")
    direction = rng.standard_normal((n, DIM))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    z = rho * (rng.random(n) ** (1.0 / DIM))[:, None] * direction
    ball = math.pi ** 3 / 6.0 * rho ** DIM
    values = ball * mollifier_eval(eps, z[:, :3], z[:, 3:], c_tilde)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n))


def vanishing_audit(field: CutoffField, samples: SingularSampleSet, seed: int, m: Optional[int] = None) -> Dict[str, float]:
    """χ_ε nas amostras de 𝔖_B (alvo: zero em todas)."""
    value, _ = cutoff_eval_batch(field, samples.phase, seed, m)
    return {
        "n": int(len(samples)),
        "zero_fraction": float((value == 0).mean()) if len(samples) else 1.0,
        "max_value": float(value.max()) if len(samples) else 0.0,
    }


def lipschitz_audit(field: CutoffField, n_pairs: int, seed: int, m: Optional[int] = None) -> Dict[str, float]:
    """|χ_ε(p) − χ_ε(q)| ≤ L|p − q| em pares próximos, com amostras de núcleo comuns."""
    m = int(m or INNER_SAMPLES)
    rng = stream(seed, "cutoff_lipschitz")
    x, v = sample_rays(field.cover.domain, n_pairs, rng, field.cover.params.v_max)
    p = np.hstack([x, v])
    offset = rng.standard_normal((n_pairs, DIM))
    offset *= (field.rho * rng.random(n_pairs) / np.linalg.norm(offset, axis=1))[:, None]
    z = field.sample_kernel(n_pairs * m, rng).reshape(n_pairs, m, DIM)
    a = field.indicator((p[:, None, :] - z).reshape(-1, DIM)).reshape(n_pairs, m).mean(axis=1)
    b = field.indicator(((p + offset)[:, None, :] - z).reshape(-1, DIM)).reshape(n_pairs, m).mean(axis=1)
    ratio = np.abs(a - b) / np.linalg.norm(offset, axis=1)
    bound = field.lipschitz_bound()
    return {"n": n_pairs, "bound": bound, "max_ratio": float(ratio.max()), "violations": int((ratio > bound).sum())}


def w11_report(field: CutoffField, n: int, seed: int, threads: Optional[int] = None) -> Dict[str, Dict[str, float]]:
    """
    Integrais W^{1,1} do corte por Monte Carlo aninhado (externo em fase, interno na convolução).

    Returns:
        bulk_complement: ∬(1−χ_ε)e^{−θ|v|²};  bulk_gradient: ∬|∂χ_ε|e^{−θ|v|²};
        boundary_complement / boundary_gradient: as versões em γ₋ com dγ = |n·v|dS dv
    """
    cover = field.cover
    params = cover.params
    inner = min(field.mc_n, INNER_SAMPLES)
    outer = max(2, n // inner)
    volume, _ = volume_estimate(cover.domain, seed=seed)
    ball = 4.0 / 3.0 * math.pi * params.v_max ** 3

    def bulk(chunk: Chunk) -> np.ndarray:
        rng = chunk.rng
        x, v = sample_rays(cover.domain, chunk.size, rng, params.v_max)
        value, _, gradient, _ = _convolve(field, np.hstack([x, v]), inner, rng, grad=True)
        weight = volume * ball * np.exp(-params.theta_w * (v ** 2).sum(axis=1))
        return np.column_stack([(1.0 - value) * weight, np.linalg.norm(gradient, axis=1) * weight])

    def boundary(chunk: Chunk) -> np.ndarray:
        rng = chunk.rng
        pts = boundary_phase_samples(cover.domain, chunk.size, rng, params.v_max)
        value, _, gradient, _ = _convolve(field, np.hstack([pts["x"], pts["v"]]), inner, rng, grad=True)
        weight = pts["weight"] * np.abs(pts["vn"]) * np.exp(-params.theta_w * (pts["v"] ** 2).sum(axis=1))
        return np.column_stack([(1.0 - value) * weight, np.linalg.norm(gradient, axis=1) * weight])

    chunk_size = max(1, min(settings.rng_chunk, 64))
    out: Dict[str, Dict[str, float]] = {}
    for label, fn in (("bulk", bulk), ("boundary", boundary)):
        values = np.concatenate(map_chunks(fn, outer, seed, f"w11_{label}", threads=threads, chunk_size=chunk_size))
        for col, name in enumerate(("complement", "gradient")):
            out[f"{label}_{name}"] = {
                "estimate": float(values[:, col].mean()),
                "std_error": float(values[:, col].std(ddof=1) / math.sqrt(len(values))),
            }
    logger.info(f"W11 ε={field.eps}: {outer} pontos externos × {inner} internos")
    return out
