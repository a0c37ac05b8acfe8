"""
Tempos e pontos de saída para trás/para frente, suas derivadas e classificação rasante.

O traçado marcha em comprimento ao longo da direção unitária û = ±v/|v| e
converte para tempo no final (t = ℓ/|v|), de modo que t_b(x, λv) = t_b(x, v)/λ
vale exatamente. Saídas são detectadas por mudança de sinal de F (seguida de
bisseção) ou por toque tangente: depois que o raio se afastou da fronteira,
uma estimativa de distância |F|/|∇F| abaixo de tol_hit·diam conta como saída,
como exige a definição por supremo.
"""
import logging
from enum import Enum
from typing import Dict, Tuple

import numpy as np

from app.core.exceptions import GrazingRay, NumericalMiss, RaytraceError
from app.core.settings import settings
from app.domain.models import Domain, ExitBatch, ExitRecord, PhasePoint

logger = logging.getLogger(__name__)

ARM_FACTOR = 100.0
MIN_STEP = 1e-5
MAX_STEP = 0.01
BISECT_TOL = 1e-12


class GrazingClass(str, Enum):
    """Classificação de um traçado quanto à rasância."""
    NONDEGENERATE = "nondegenerate"
    GRAZING = "grazing"


def _require_shape(domain: Domain) -> None:
    if domain.shape is None:
        raise RaytraceError("Domínio sem forma implícita não suporta traçado")


def _distance(shape, pts: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    f = shape.phi(pts)
    g = shape.grad(pts)
    gn = np.linalg.norm(g, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        dist = np.where(gn > 0, np.abs(f) / gn, np.inf)
    return f, g, dist


def _bisect(shape, x: np.ndarray, u: np.ndarray, lo: np.ndarray, hi: np.ndarray, tol: float) -> np.ndarray:
    """Raiz de F(x + ℓu) em [lo, hi] com F(lo) < 0 ≤ F(hi)."""
    lo = lo.copy()
    hi = hi.copy()
    while len(lo) and np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        outside = shape.phi(x + mid[:, None] * u) >= 0
        hi = np.where(outside, mid, hi)
        lo = np.where(outside, lo, mid)
    return 0.5 * (lo + hi)


def _refine_touch(shape, x: np.ndarray, u: np.ndarray, ell: np.ndarray, diam: float) -> np.ndarray:
    """Newton em g(ℓ) = ∇F(x + ℓu)·u para localizar o ponto de tangência."""
    ell = ell.copy()
    cap = 1e-3 * diam
    for _ in range(20):
        pts = x + ell[:, None] * u
        g = (shape.grad(pts) * u).sum(axis=1)
        dg = np.einsum("ni,nij,nj->n", u, shape.hessian(pts), u)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(np.abs(dg) > 0, g / dg, 0.0)
        step = np.clip(step, -cap, cap)
        ell = ell - step
        if np.max(np.abs(step), initial=0.0) < BISECT_TOL * diam:
            break
    return np.maximum(ell, 0.0)


def _march(domain: Domain, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Comprimento até a primeira saída (cruzamento ou toque) para pontos de partida interiores."""
    shape = domain.shape
    diam = domain.diam
    n = len(x)
    ell = np.zeros(n)
    prev = np.zeros(n)
    result = np.full(n, np.nan)
    touched = np.zeros(n, dtype=bool)
    armed = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    hit_tol = settings.tol_hit * diam
    steps = 0
    while np.any(active):
        steps += 1
        if steps > settings.max_march_steps:
            raise NumericalMiss(f"{int(active.sum())} raios sem saída após {settings.max_march_steps} passos")
        idx = np.nonzero(active)[0]
        f, _, dist = _distance(shape, x[idx] + ell[idx, None] * u[idx])

        # partidas na fronteira podem ter F ≥ 0 por arredondamento em ℓ = 0
        crossed = (f >= 0) & (ell[idx] > 0)
        if np.any(crossed):
            sel = idx[crossed]
            result[sel] = _bisect(shape, x[sel], u[sel], prev[sel], ell[sel], BISECT_TOL * diam)
            active[sel] = False

        touch = ~crossed & armed[idx] & (dist < hit_tol)
        if np.any(touch):
            sel = idx[touch]
            result[sel] = ell[sel]
            touched[sel] = True
            active[sel] = False

        going = ~crossed & ~touch
        sel = idx[going]
        armed[sel] |= dist[going] > ARM_FACTOR * hit_tol
        step = np.minimum(MAX_STEP * diam, np.maximum(0.1 * dist[going], MIN_STEP * diam))
        prev[sel] = ell[sel]
        ell[sel] = ell[sel] + step

    if np.any(touched):
        sel = np.nonzero(touched)[0]
        pts = x[sel] + result[sel, None] * u[sel]
        g = shape.grad(pts)
        gu = (g * u[sel]).sum(axis=1)
        transversal = np.abs(gu) > settings.tol_nd * np.linalg.norm(g, axis=1)
        # quase-cruzamento transversal: Newton em F ao longo do raio
        cross = sel[transversal]
        for _ in range(3):
            if len(cross) == 0:
                break
            pts = x[cross] + result[cross, None] * u[cross]
            result[cross] -= shape.phi(pts) / (shape.grad(pts) * u[cross]).sum(axis=1)
        tang = sel[~transversal]
        if len(tang):
            refined = _refine_touch(shape, x[tang], u[tang], result[tang], diam)
            good = np.abs(refined - result[tang]) < 10.0 * MIN_STEP * diam
            result[tang[good]] = refined[good]
    return result


def _exit_lengths(domain: Domain, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Comprimento ℓ até a saída ao longo de u e indicador de partida na fronteira.

    Partidas na fronteira com u apontando para fora dão ℓ = 0; partidas
    tangentes são sondadas um pouco adiante.
    """
    shape = domain.shape
    diam = domain.diam
    f, g, dist = _distance(shape, x)
    on_boundary = dist <= settings.tol_b * diam
    gn = np.linalg.norm(g, axis=1)
    gu = (g * u).sum(axis=1)

    ell = np.full(len(x), np.nan)
    ell[(f > 0) & ~on_boundary] = 0.0
    outgoing = on_boundary & (gu > settings.tol_g * gn)
    ell[outgoing] = 0.0
    tangent = on_boundary & (np.abs(gu) <= settings.tol_g * gn)
    if np.any(tangent):
        step_out = x[tangent] + 1e-6 * diam * u[tangent]
        leaves = shape.phi(step_out) >= 0
        rows = np.nonzero(tangent)[0]
        ell[rows[leaves]] = 0.0

    pending = np.isnan(ell)
    if np.any(pending):
        analytic = shape.analytic_exit(x[pending], u[pending])
        ell[pending] = analytic if analytic is not None else _march(domain, x[pending], u[pending])
    return ell, on_boundary


def trace_exits(domain: Domain, x: np.ndarray, v: np.ndarray, forward: bool = False) -> ExitBatch:
    """
    Traça saídas em lote.

    Args:
        domain: Domínio
        x: Posições (n, 3) em Ω̄
        v: Velocidades (n, 3)
        forward: True para (t_f, x_f); False para (t_b, x_b)

    Returns:
        ExitBatch; velocidades nulas (ou raios que nunca saem) recebem t = +inf
    """
    _require_shape(domain)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    n = len(x)
    speed = np.linalg.norm(v, axis=1)
    moving = speed > 0

    t = np.full(n, np.inf)
    x_exit = np.full((n, 3), np.nan)
    normal = np.full((n, 3), np.nan)
    speed_normal = np.full(n, np.nan)
    chart_id = np.full(n, -1, dtype=int)
    on_start = np.zeros(n, dtype=bool)

    if np.any(moving):
        rows = np.nonzero(moving)[0]
        sign = 1.0 if forward else -1.0
        u = sign * v[rows] / speed[rows, None]
        ell, on_boundary = _exit_lengths(domain, x[rows], u)
        on_start[rows] = on_boundary & (ell == 0.0)
        finite = np.isfinite(ell)
        hit = rows[finite]
        t[hit] = ell[finite] / speed[hit]
        x_exit[hit] = x[hit] + ell[finite, None] * u[finite]
        g = domain.shape.grad(x_exit[hit])
        normal[hit] = g / np.linalg.norm(g, axis=1)[:, None]
        speed_normal[hit] = (normal[hit] * v[hit]).sum(axis=1)
        chart_id[hit], _ = domain.locate(x_exit[hit])

    grazing = ~(np.abs(speed_normal) > settings.tol_g * speed)
    return ExitBatch(
        t=t,
        x_exit=x_exit,
        normal=normal,
        speed_normal=speed_normal,
        chart_id=chart_id,
        grazing=grazing,
        on_boundary_start=on_start,
    )


def backward_exit(domain: Domain, p: PhasePoint) -> ExitRecord:
    """(t_b, x_b) de um ponto de fase; v = 0 devolve t_b = +inf sem ponto de saída."""
    return trace_exits(domain, p.x[None, :], p.v[None, :], forward=False).record(0)


def forward_exit(domain: Domain, p: PhasePoint) -> ExitRecord:
    """(t_f, x_f) de um ponto de fase; espelha backward_exit com +s·v."""
    return trace_exits(domain, p.x[None, :], p.v[None, :], forward=True).record(0)


def exit_derivatives_batch(domain: Domain, x: np.ndarray, v: np.ndarray, exits: ExitBatch | None = None) -> Dict[str, np.ndarray]:
    """
    Derivadas analíticas de (t_b, x_b) em lote.

    Linhas rasantes (|n(x_b)·v| ≤ tol_nd·|v|) ficam com NaN e `valid` = False.
    """
    x = np.atleast_2d(x)
    v = np.atleast_2d(v)
    exits = exits if exits is not None else trace_exits(domain, x, v)
    speed = np.linalg.norm(v, axis=1)
    with np.errstate(invalid="ignore"):
        valid = np.isfinite(exits.t) & (np.abs(exits.speed_normal) > settings.tol_nd * speed)
    n = len(x)
    eye = np.broadcast_to(np.eye(3), (n, 3, 3))
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(valid[:, None], exits.normal / exits.speed_normal[:, None], np.nan)
        tb = np.where(valid, exits.t, np.nan)
        grad_x_tb = k
        grad_v_tb = -tb[:, None] * k
        # ∂(x_b)_i/∂x_j = δ_ij − v_i k_j
        grad_x_xb = eye - np.einsum("ni,nj->nij", v, k)
        grad_v_xb = -tb[:, None, None] * eye + tb[:, None, None] * np.einsum("ni,nj->nij", v, k)
    return {
        "valid": valid,
        "grad_x_tb": grad_x_tb,
        "grad_v_tb": grad_v_tb,
        "grad_x_xb": grad_x_xb,
        "grad_v_xb": grad_v_xb,
        "exits": exits,
    }


def exit_derivatives(domain: Domain, p: PhasePoint) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    (∇ₓt_b, ∇ᵥt_b, ∇ₓx_b, ∇ᵥx_b) no ponto traçado x_b.

    As matrizes seguem a convenção jacobiana: [∇ₓx_b]_ij = ∂(x_b)_i/∂x_j.

    Raises:
        GrazingRay: Se |n(x_b)·v| ≤ tol_nd·|v| ou se o raio não sai
    """
    out = exit_derivatives_batch(domain, p.x[None, :], p.v[None, :])
    if not out["valid"][0]:
        rec = out["exits"].record(0)
        raise GrazingRay(f"|n(x_b)·v| = {abs(rec.speed_normal):.3e} abaixo de tol_nd·|v|")
    return (
        out["grad_x_tb"][0],
        out["grad_v_tb"][0],
        out["grad_x_xb"][0],
        out["grad_v_xb"][0],
    )


def exit_derivatives_fd(domain: Domain, p: PhasePoint, h: float = 1e-5) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Mesmas derivadas por diferenças centrais de passo h (oráculo de auditoria)."""
    base = np.concatenate([p.x, p.v])
    plus = np.repeat(base[None, :], 6, axis=0) + h * np.eye(6)
    minus = np.repeat(base[None, :], 6, axis=0) - h * np.eye(6)
    stacked = np.concatenate([plus, minus])
    exits = trace_exits(domain, stacked[:, :3], stacked[:, 3:])
    dt = (exits.t[:6] - exits.t[6:]) / (2 * h)
    dx = ((exits.x_exit[:6] - exits.x_exit[6:]) / (2 * h)).T
    return dt[:3], dt[3:], dx[:, :3], dx[:, 3:]


def grazing_classify(domain: Domain, p: PhasePoint, tol: float | None = None) -> GrazingClass:
    """Rasante sse |n(x_b(x,v))·v| ≤ tol·|v|; raios sem saída contam como rasantes."""
    tol = settings.tol_g if tol is None else tol
    rec = backward_exit(domain, p)
    if not rec.hits:
        return GrazingClass.GRAZING
    speed = float(np.linalg.norm(p.v))
    if abs(rec.speed_normal) <= tol * speed:
        return GrazingClass.GRAZING
    return GrazingClass.NONDEGENERATE


def dense_exit_oracle(domain: Domain, x: np.ndarray, v: np.ndarray, forward: bool = False) -> np.ndarray:
    """
    Oráculo de marcha densa: passo fixo 1e−4·diam e bisseção até 1e−10·diam.

    Ignora fórmulas analíticas; usado apenas para auditar `trace_exits`.
    """
    _require_shape(domain)
    shape = domain.shape
    diam = domain.diam
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    speed = np.linalg.norm(v, axis=1)
    u = (1.0 if forward else -1.0) * v / speed[:, None]
    step = 1e-4 * diam
    n = len(x)
    ell = np.zeros(n)
    result = np.full(n, np.inf)
    active = np.ones(n, dtype=bool)
    limit = int(np.ceil(4.0 / 1e-4))
    for _ in range(limit):
        if not np.any(active):
            break
        idx = np.nonzero(active)[0]
        trial = ell[idx] + step
        out = shape.phi(x[idx] + trial[:, None] * u[idx]) >= 0
        if np.any(out):
            sel = idx[out]
            result[sel] = _bisect(shape, x[sel], u[sel], ell[sel], trial[out], 1e-10 * diam)
            active[sel] = False
        ell[idx[~out]] = trial[~out]
    return result / speed


def check_involution(domain: Domain, x: np.ndarray, v: np.ndarray) -> Dict[str, float]:
    """
    Auditoria da involução x_b ↔ x_f em raios não rasantes.

    Verifica x_f(x_b(x,v), v) = x_f(x,v) e t_b(x_b(x,v), −v) = t_b(x,v) + t_f(x,v);
    para x ∈ γ₊ (t_f = 0) reduzem-se a x_f(x_b, v) = x e t_b(x_b, −v) = t_b.
    """
    x = np.atleast_2d(x)
    v = np.atleast_2d(v)
    back = trace_exits(domain, x, v)
    fwd = trace_exits(domain, x, v, forward=True)
    speed = np.linalg.norm(v, axis=1)
    ok = np.isfinite(back.t) & np.isfinite(fwd.t)
    with np.errstate(invalid="ignore"):
        ok &= (np.abs(back.speed_normal) > settings.tol_nd * speed) & (np.abs(fwd.speed_normal) > settings.tol_nd * speed)
    if not np.any(ok):
        return {"n": 0, "max_position_error": 0.0, "max_time_error": 0.0}
    xb = back.x_exit[ok]
    again = trace_exits(domain, xb, v[ok], forward=True)
    reverse = trace_exits(domain, xb, -v[ok], forward=False)
    pos_err = np.linalg.norm(domain.shape.wrap(again.x_exit - fwd.x_exit[ok]), axis=1)
    time_err = np.abs(reverse.t - (back.t[ok] + fwd.t[ok])) * speed[ok]
    result = {
        "n": int(ok.sum()),
        "max_position_error": float(np.max(pos_err)),
        "max_time_error": float(np.max(time_err)),
    }
    logger.debug(f"Involução: {result}")
    return result


def sample_rays(domain: Domain, n: int, rng: np.random.Generator, v_max: float | None = None) -> Tuple[np.ndarray, np.ndarray]:
    """Posições uniformes em Ω (rejeição na caixa) e velocidades uniformes em B(0, V_max)."""
    _require_shape(domain)
    v_max = settings.v_max if v_max is None else v_max
    lo, hi = domain.shape.bounding_box()
    pts = []
    count = 0
    while count < n:
        cand = lo + (hi - lo) * rng.random((max(2 * (n - count), 16), 3))
        cand = cand[domain.shape.phi(cand) < 0]
        pts.append(cand)
        count += len(cand)
    x = np.concatenate(pts)[:n]
    direction = rng.standard_normal((n, 3))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    radius = v_max * rng.random(n) ** (1.0 / 3.0)
    return x, direction * radius[:, None]
