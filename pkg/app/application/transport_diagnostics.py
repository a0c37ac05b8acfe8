"""
Diagnósticos do transporte: identidade de Green, integrais de traço,
variação total com perfil de saltos e o experimento da iteração difusa.
"""
import dataclasses
import logging
import math
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from app.application.cutoff import CutoffField, cutoff_eval_batch
from app.application.geometry import boundary_from_uniform, boundary_phase_samples, graph_points
from app.application.raytrace import sample_rays
from app.application.singular import singular_normal
from app.application.transport import FieldSampler, TransportProblem, evaluate_batch
from app.core.exceptions import BudgetExceeded, GridTooCoarse
from app.core.parallel import map_chunks
from app.core.rng import Chunk, stream
from app.core.settings import settings
from app.domain.models import Domain, SingularSampleSet

logger = logging.getLogger(__name__)

JUMP_LEVELS = (4e-2, 2e-2, 1e-2)
# piso de ruído do avaliador exato (tolerância da quadratura)
JUMP_NOISE_FLOOR = 1e-8
DELTA_LADDER = (0.5, 0.25, 0.125)


def _sobol(dim: int, n: int, seed: int, name: str) -> np.ndarray:
    """Sobol embaralhado com 2^⌈log₂ n⌉ pontos."""
    engine = qmc.Sobol(d=dim, scramble=True, seed=stream(seed, name))
    return engine.random_base2(max(1, math.ceil(math.log2(max(int(n), 2)))))


def _ball_velocity(u: np.ndarray, v_max: float) -> np.ndarray:
    z = 2.0 * u[:, 0] - 1.0
    phi = 2.0 * math.pi * u[:, 1]
    r = v_max * np.cbrt(u[:, 2])
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return r[:, None] * np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def _power(f: np.ndarray, p: int) -> np.ndarray:
    return np.abs(f) ** p


def green_residual(sampler: FieldSampler, p_exp: int, t: float, n: int = 1 << 14, seed: int = 0, v_max: Optional[float] = None) -> Dict[str, float]:
    """
    Resíduo relativo da identidade de Green em B(0, v_max):

        ‖f(t)‖ₚᵖ + ∫₀ᵗ|f|ᵖ_{γ₊} = ‖f(0)‖ₚᵖ + ∫₀ᵗ|f|ᵖ_{γ₋} + p∫₀ᵗ∫∫|f|^{p−1}sgn(f)(H − νf)

    Os cinco termos usam Sobol embaralhado (volume na caixa envolvente,
    fronteira pelas cartas, tempo uniforme em [0, t]).
    """
    if p_exp not in (1, 2):
        raise ValueError(f"p deve ser 1 ou 2 (recebido {p_exp})")
    problem = sampler.problem
    domain = problem.domain
    v_max = settings.v_max if v_max is None else v_max
    ball = 4.0 / 3.0 * math.pi * v_max ** 3

    u = _sobol(7, n, seed, "green_bulk")
    lo, hi = domain.shape.bounding_box()
    box = float(np.prod(hi - lo))
    x = lo + (hi - lo) * u[:, :3]
    v = _ball_velocity(u[:, 3:6], v_max)
    s = t * u[:, 6]
    inside = domain.inside(x)
    xi, vi, si = x[inside], v[inside], s[inside]
    scale = box * ball / len(u)
    rng = stream(seed, "green_paths")

    norm_t = scale * _power(evaluate_batch(sampler, t, xi, vi, rng), p_exp).sum()
    norm_0 = scale * _power(problem.init(xi, vi), p_exp).sum()
    f_s = evaluate_batch(sampler, si, xi, vi, rng)
    h = problem.source(si, xi, vi) if problem.source is not None else np.zeros(len(xi))
    drift = h - problem.nu(si, xi, vi) * f_s
    bulk = t * scale * (p_exp * np.abs(f_s) ** (p_exp - 1) * np.sign(f_s) * drift).sum()

    def trace(outgoing: bool, name: str) -> float:
        ub = _sobol(7, n, seed, name)
        pts = boundary_from_uniform(domain, ub[:, :3])
        vb = _ball_velocity(ub[:, 3:6], v_max)
        vn = (vb * pts["normal"]).sum(axis=1)
        flip = vn < 0 if outgoing else vn > 0
        vb = np.where(flip[:, None], -vb, vb)
        vn = np.abs(vn)
        sb = t * ub[:, 6]
        fb = evaluate_batch(sampler, sb, pts["x"], vb, rng)
        return float(t * 0.5 * ball * (pts["weight"] * _power(fb, p_exp) * vn).mean())

    out_flux = trace(True, "green_out")
    in_flux = trace(False, "green_in")
    lhs = float(norm_t + out_flux)
    rhs = float(norm_0 + in_flux + bulk)
    denom = abs(lhs) + abs(rhs)
    residual = abs(lhs - rhs) / denom if denom > 0 else 0.0
    result = {
        "p": p_exp,
        "norm_t": float(norm_t),
        "norm_0": float(norm_0),
        "outgoing": out_flux,
        "incoming": in_flux,
        "bulk": float(bulk),
        "lhs": lhs,
        "rhs": rhs,
        "residual": float(residual),
        "n": int(len(u)),
    }
    logger.info(f"Green p={p_exp}: resíduo {residual:.3e}")
    return result


def almost_grazing(vn: np.ndarray, v: np.ndarray, delta: float) -> np.ndarray:
    """γ₊^δ = {n·v < δ ou |v| > 1/δ}."""
    return (vn < delta) | (np.linalg.norm(v, axis=1) > 1.0 / delta)


def trace_integrals(
    sampler: FieldSampler,
    delta: float,
    t: float,
    n: int = 20_000,
    seed: int = 0,
    v_max: Optional[float] = None,
    threads: Optional[int] = None,
) -> Dict[str, float]:
    """Integrais ∫₀ᵗ∫|f| dγ sobre γ₊^δ (próximo) e γ₊∖γ₊^δ (longe)."""
    domain = sampler.problem.domain
    v_max = settings.v_max if v_max is None else v_max

    def work(chunk: Chunk) -> np.ndarray:
        rng = chunk.rng
        pts = boundary_phase_samples(domain, chunk.size, rng, v_max, outgoing=True)
        s = t * rng.random(chunk.size)
        f = evaluate_batch(sampler, s, pts["x"], pts["v"], rng)
        mass = t * pts["weight"] * np.abs(f) * pts["vn"]
        near = almost_grazing(pts["vn"], pts["v"], delta)
        return np.column_stack([np.where(near, mass, 0.0), np.where(near, 0.0, mass)])

    values = np.concatenate(map_chunks(work, n, seed, "trace_integrals", threads))
    mean = values.mean(axis=0)
    se = values.std(axis=0, ddof=1) / math.sqrt(len(values))
    return {
        "delta": float(delta),
        "near": float(mean[0]),
        "near_std_error": float(se[0]),
        "far": float(mean[1]),
        "far_std_error": float(se[1]),
        "n": int(len(values)),
    }


@dataclass(frozen=True)
class GridSpec:
    """Grade uniforme do espaço de fase em [lo, hi] ⊂ ℝ⁶ com `points` nós por eixo."""
    lo: Sequence[float]
    hi: Sequence[float]
    points: int = 6
    feature_scale: float = float("inf")

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.hi, dtype=float) - np.asarray(self.lo, dtype=float)) / (self.points - 1)

    @property
    def h(self) -> float:
        return float(self.spacing.max())

    def nodes(self) -> np.ndarray:
        axes = [np.linspace(a, b, self.points) for a, b in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def total_variation(sampler: FieldSampler, t: float, grid: GridSpec, seed: int = 0) -> float:
    """
    Variação total discreta Σ_k Σ|Δ_k f|·Π_{j≠k} h_j sobre pares de nós em Ω.

    Raises:
        GridTooCoarse: Se h da grade excede a escala das feições
    """
    if grid.h > grid.feature_scale:
        raise GridTooCoarse(f"h = {grid.h:.3g} maior que a escala {grid.feature_scale:.3g}")
    domain = sampler.problem.domain
    nodes = grid.nodes()
    inside = domain.inside(nodes[:, :3])
    values = np.zeros(len(nodes))
    values[inside] = evaluate_batch(sampler, t, nodes[inside, :3], nodes[inside, 3:], stream(seed, "total_variation"))
    shape = (grid.points,) * 6
    f = values.reshape(shape)
    mask = inside.reshape(shape)
    spacing = grid.spacing
    tv = 0.0
    for k in range(6):
        both = np.logical_and(np.delete(mask, 0, axis=k), np.delete(mask, -1, axis=k))
        face = float(np.prod(np.delete(spacing, k)))
        tv += face * float(np.abs(np.diff(f, axis=k))[both].sum())
    return tv


@dataclass
class JumpTargets:
    """Pontos de fase (n, 6) e direções unitárias (n, 6) para o detector de saltos."""
    phase: np.ndarray
    direction: np.ndarray

    def __len__(self) -> int:
        return len(self.phase)


def singular_jump_targets(domain: Domain, samples: SingularSampleSet, t: float, max_points: int = 500) -> JumpTargets:
    """Amostras de 𝔖_B cujo toque rasante ocorre antes de t, com direção 𝒩/|𝒩|."""
    rows = np.nonzero(samples.s < t)[0][:max_points]
    phase, direction = [], []
    for i in rows:
        normal = singular_normal(domain, samples.params(int(i)))
        size = np.linalg.norm(normal)
        if size <= 1e-12:
            continue
        phase.append(samples.phase[i])
        direction.append(normal / size)
    if not phase:
        return JumpTargets(np.zeros((0, 6)), np.zeros((0, 6)))
    return JumpTargets(np.array(phase), np.array(direction))


def random_jump_targets(domain: Domain, n: int, seed: int, v_max: Optional[float] = None) -> JumpTargets:
    """Pontos uniformes em Ω × B(0, v_max) com direções uniformes em S⁵."""
    rng = stream(seed, "random_jump_targets")
    x, v = sample_rays(domain, n, rng, v_max)
    direction = rng.standard_normal((n, 6))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    return JumpTargets(np.hstack([x, v]), direction)


def jump_profile(sampler: FieldSampler, t: float, targets: JumpTargets, levels: Sequence[float] = JUMP_LEVELS, seed: int = 0) -> List[Dict[str, float]]:
    """|f(q⁺) − f(q⁻)| em q± = q ± h·direção, por nível h; pares com x fora de Ω são descartados."""
    domain = sampler.problem.domain
    profile = []
    for h in levels:
        plus = targets.phase + h * targets.direction
        minus = targets.phase - h * targets.direction
        keep = domain.inside(plus[:, :3]) & domain.inside(minus[:, :3]) if len(targets) else np.zeros(0, dtype=bool)
        if not np.any(keep):
            profile.append({"h": float(h), "n": 0, "mean": 0.0, "median": 0.0, "max": 0.0})
            continue
        # mesmo gerador para q⁺ e q⁻
        f_plus = evaluate_batch(sampler, t, plus[keep, :3], plus[keep, 3:], stream(seed, "jump_profile"))
        f_minus = evaluate_batch(sampler, t, minus[keep, :3], minus[keep, 3:], stream(seed, "jump_profile"))
        jumps = np.abs(f_plus - f_minus)
        profile.append({
            "h": float(h),
            "n": int(keep.sum()),
            "mean": float(jumps.mean()),
            "median": float(np.median(jumps)),
            "max": float(jumps.max()),
        })
    return profile


def bv_and_jump(
    sampler: FieldSampler,
    t: float,
    grid: GridSpec,
    targets: JumpTargets,
    levels: Sequence[float] = JUMP_LEVELS,
    seed: int = 0,
) -> Dict[str, Any]:
    """Variação total na grade e perfil de saltos através dos alvos."""
    tv = total_variation(sampler, t, grid, seed)
    profile = jump_profile(sampler, t, targets, levels, seed)
    logger.info(f"BV: tv={tv:.4g} (h={grid.h:.3g}); saltos médios {[round(p['mean'], 5) for p in profile]}")
    return {"tv": tv, "grid_h": grid.h, "jump_profile": profile}


def _tangential_gradient(
    sampler: FieldSampler,
    s: np.ndarray,
    pts: Dict[str, np.ndarray],
    v: np.ndarray,
    paths: int,
    step: float,
    name: str,
) -> np.ndarray:
    """|∇_τ f| em pontos de fronteira por diferenças centrais na carta, com números aleatórios comuns."""
    domain = sampler.problem.domain
    n = len(s)
    ids = pts["chart_id"]
    rep_s = np.repeat(s, paths)
    rep_v = np.repeat(v, paths, axis=0)
    derivs = np.zeros((n, 2))
    tangents = np.zeros((n, 2, 3))
    for k in range(2):
        offset = np.zeros(2)
        offset[k] = step
        y_plus = graph_points(domain, ids, pts["xi"] + offset)
        y_minus = graph_points(domain, ids, pts["xi"] - offset)
        f_plus = evaluate_batch(sampler, rep_s, np.repeat(y_plus, paths, axis=0), rep_v, stream(sampler.seed, name, k))
        f_minus = evaluate_batch(sampler, rep_s, np.repeat(y_minus, paths, axis=0), rep_v, stream(sampler.seed, name, k))
        derivs[:, k] = (f_plus - f_minus).reshape(n, paths).mean(axis=1) / (2.0 * step)
        tangents[:, k] = (y_plus - y_minus) / (2.0 * step)
    metric = np.einsum("nai,nbi->nab", tangents, tangents)
    solved = np.linalg.solve(metric, derivs[:, :, None])[:, :, 0]
    return np.sqrt(np.clip((derivs * solved).sum(axis=1), 0.0, None))


def _with_cutoff(problem: TransportProblem, sampler_kwargs: Dict[str, Any], field: Optional[CutoffField], seed: int, cutoff_m: int):
    if field is None:
        return problem, sampler_kwargs

    def keep(x, v):
        chi, _ = cutoff_eval_batch(field, np.hstack([np.atleast_2d(x), np.atleast_2d(v)]), seed, m=cutoff_m)
        return 1.0 - chi

    init = problem.init
    regularised = dataclasses.replace(problem, init=lambda x, v: keep(x, v) * init(x, v))
    return regularised, {**sampler_kwargs, "reemission_weight": keep}


def iteration_trace_experiment(
    problem: TransportProblem,
    m_max: int,
    t: float,
    deltas: Sequence[float] = DELTA_LADDER,
    n: int = 256,
    paths: int = 16,
    seed: int = 0,
    cutoff: Optional[CutoffField] = None,
    cutoff_m: int = 64,
    budget_seconds: Optional[float] = None,
    step: float = 1e-3,
    v_max: Optional[float] = None,
) -> Dict[str, Any]:
    """
    Iteração difusa f^{m+1} = transporte com reemissão de f^m (profundidade m+1).

    Para cada iterado reporta a massa de traço em γ₋ de |∇_τ f^{m+1}| e a
    divisão γ₊^δ / γ₊∖γ₊^δ da massa de |∇_τ f^m| em γ₊ para cada δ.
    Critério: a parcela atribuída a γ₊^δ não cresce quando δ diminui.

    Raises:
        BudgetExceeded: Se o tempo de parede exceder budget_seconds
    """
    if problem.boundary != "diffuse":
        raise ValueError("O experimento da iteração exige fronteira difusa")
    domain = problem.domain
    v_max = settings.v_max if v_max is None else v_max
    budget = settings.budget_seconds if budget_seconds is None else budget_seconds
    started = time.perf_counter()
    problem, kwargs = _with_cutoff(problem, {"samples": paths, "seed": seed}, cutoff, seed, cutoff_m)

    rng = stream(seed, "iteration_trace")
    incoming = boundary_phase_samples(domain, n, rng, v_max, outgoing=False)
    outgoing = boundary_phase_samples(domain, n, rng, v_max, outgoing=True)
    s_in = t * rng.random(n)
    s_out = t * rng.random(n)
    ordered = sorted(deltas, reverse=True)

    rows = []
    for m in range(int(m_max) + 1):
        current = FieldSampler(problem, mode="diffuse", depth=m, **kwargs)
        following = FieldSampler(problem, mode="diffuse", depth=m + 1, **kwargs)
        grad_in = _tangential_gradient(following, s_in, incoming, incoming["v"], paths, step, f"iteration_in_{m}")
        mass_in = t * incoming["weight"] * grad_in * np.abs(incoming["vn"])
        grad_out = _tangential_gradient(current, s_out, outgoing, outgoing["v"], paths, step, f"iteration_out_{m}")
        mass_out = t * outgoing["weight"] * grad_out * outgoing["vn"]
        total_out = float(mass_out.mean())
        split = []
        for delta in ordered:
            near = almost_grazing(outgoing["vn"], outgoing["v"], delta)
            near_mass = float(np.where(near, mass_out, 0.0).mean())
            split.append({
                "delta": float(delta),
                "near": near_mass,
                "far": total_out - near_mass,
                "share": near_mass / total_out if total_out > 0 else 0.0,
            })
        rows.append({
            "m": m,
            "gamma_minus_trace": float(mass_in.mean()),
            "gamma_minus_std_error": float(mass_in.std(ddof=1) / math.sqrt(n)),
            "gamma_plus_trace": total_out,
            "split": split,
        })
        elapsed = time.perf_counter() - started
        logger.info(f"Iterado {m}: traço γ₋ {rows[-1]['gamma_minus_trace']:.4g} ({elapsed:.1f}s)")
        if elapsed > budget:
            raise BudgetExceeded(f"Iteração excedeu {budget:.0f}s no iterado {m}")

    shares = [entry["share"] for entry in rows[-1]["split"]]
    passed = all(b <= a + 1e-12 for a, b in zip(shares, shares[1:]))
    return {"iterates": rows, "deltas": [float(d) for d in ordered], "passed": bool(passed)}
