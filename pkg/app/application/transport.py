"""
Transporte linear ∂_t f + v·∇ₓf + νf = H por características e Duhamel.

Modo "inflow": f(t,x,v) é dado em forma fechada a menos de integrais ao longo
da característica (quadratura adaptativa no avaliador pontual, Gauss-Legendre
no avaliador em lote). Modo "diffuse": estimador recursivo para trás com
reemissão Maxwelliana de densidade c_μ μ(u)(n·u) em n·u > 0.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad, quad_vec

from app.application.raytrace import exit_derivatives_batch, trace_exits
from app.core.exceptions import GrazingRay, NearSingularTime, QuadratureFailure
from app.core.rng import stream
from app.core.settings import settings
from app.domain.models import Domain, PhasePoint

logger = logging.getLogger(__name__)

C_MU = 1.0 / (2.0 * math.pi)
QUAD_EPSREL = 1e-8
GAUSS_NODES = 32

Field3 = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
Field2 = Callable[[np.ndarray, np.ndarray], np.ndarray]


def maxwellian(v: np.ndarray) -> np.ndarray:
    """μ(v) = exp(−|v|²/2)."""
    return np.exp(-0.5 * (np.atleast_2d(v) ** 2).sum(axis=1))


def sqrt_maxwellian(v: np.ndarray) -> np.ndarray:
    return np.exp(-0.25 * (np.atleast_2d(v) ** 2).sum(axis=1))


def _zero3(t, x, v):
    return np.zeros(len(np.atleast_2d(x)))


def _zero_vec3(t, x, v):
    return np.zeros((len(np.atleast_2d(x)), 3))


def _zero2(x, v):
    return np.zeros(len(np.atleast_2d(x)))


def _zero_vec2(x, v):
    return np.zeros((len(np.atleast_2d(x)), 3))


@dataclass
class TransportProblem:
    """
    Dados do problema de transporte linear.

    Campos vetorizados: f(t (n,), x (n,3), v (n,3)) → (n,). Derivadas ausentes
    são tratadas como nulas. `nu_constant` ativa a atenuação em forma fechada;
    sem `nu`, ν é a constante `nu_constant` (zero por padrão).
    """
    domain: Domain
    init: Field2 = _zero2
    nu: Optional[Field3] = None
    source: Optional[Field3] = None
    inflow: Field3 = _zero3
    boundary: str = "inflow"
    horizon: float = 1.0
    nu_constant: Optional[float] = None
    init_grad_x: Callable = _zero_vec2
    init_grad_v: Callable = _zero_vec2
    nu_grad_x: Callable = _zero_vec3
    nu_grad_v: Callable = _zero_vec3
    source_grad_x: Callable = _zero_vec3
    source_grad_v: Callable = _zero_vec3
    inflow_dt: Field3 = _zero3
    inflow_grad_x: Callable = _zero_vec3
    inflow_grad_v: Callable = _zero_vec3
    sup_bound: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.boundary not in ("inflow", "diffuse"):
            raise ValueError(f"Condição de fronteira desconhecida: {self.boundary}")
        if self.nu is None:
            rate = float(self.nu_constant or 0.0)
            self.nu_constant = rate
            self.nu = lambda t, x, v: np.full(len(np.atleast_2d(x)), rate)


@dataclass
class FieldSampler:
    """Avaliador determinístico de f dado (ponto, semente)."""
    problem: TransportProblem
    mode: str = "inflow"
    depth: int = 5
    samples: int = 2000
    seed: int = 0
    reemission_weight: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.mode not in ("inflow", "diffuse"):
            raise ValueError(f"Modo desconhecido: {self.mode}")
        if self.mode != self.problem.boundary:
            raise ValueError(f"Modo {self.mode} incompatível com a fronteira {self.problem.boundary}")
        if self.depth < 0:
            raise ValueError("depth deve ser >= 0")


@dataclass
class DiffuseEstimate:
    """Estimativa do modo difuso; depth_exhausted é um indicador, não uma falha."""
    value: float
    std_error: float
    depth_exhausted: bool
    exhausted_fraction: float
    truncation_bound: float
    details: Dict[str, float] = field(default_factory=dict)


def _quad(fn: Callable[[float], float], a: float, b: float) -> float:
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(fn, a, b, epsabs=1e-14, epsrel=QUAD_EPSREL, limit=200)
        except IntegrationWarning as exc:
            raise QuadratureFailure(f"Quadratura em [{a:.4g}, {b:.4g}] não convergiu: {exc}") from exc
    return float(value)


def _quad_vec(fn: Callable[[float], np.ndarray], a: float, b: float) -> np.ndarray:
    if b <= a:
        return np.zeros_like(np.asarray(fn(a), dtype=float))
    value, err = quad_vec(fn, a, b, epsabs=1e-14, epsrel=QUAD_EPSREL)
    if not np.all(np.isfinite(value)):
        raise QuadratureFailure(f"Quadratura vetorial em [{a:.4g}, {b:.4g}] não finita")
    return np.asarray(value, dtype=float)


class _Characteristic:
    """Característica X(τ) = x − (t−τ)v de um único ponto, com as integrais de Duhamel."""

    def __init__(self, problem: TransportProblem, t: float, x: np.ndarray, v: np.ndarray):
        self.problem = problem
        self.t = float(t)
        self.x = np.asarray(x, dtype=float)
        self.v = np.asarray(v, dtype=float)

    def point(self, tau: float) -> np.ndarray:
        return (self.x - (self.t - tau) * self.v)[None, :]

    def _eval(self, fn, tau: float):
        return fn(np.array([tau]), self.point(tau), self.v[None, :])[0]

    def nu(self, tau: float) -> float:
        return float(self._eval(self.problem.nu, tau))

    def attenuation(self, s: float) -> float:
        """A(s) = ∫_s^t ν(τ, X(τ), v) dτ."""
        if self.problem.nu_constant is not None:
            return self.problem.nu_constant * (self.t - s)
        return _quad(self.nu, s, self.t)

    def grad_attenuation(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        """(∇ₓA(s), ∇ᵥA(s)) com ∂X/∂v = −(t−τ)I."""
        if self.problem.nu_constant is not None:
            return np.zeros(3), np.zeros(3)

        def integrand(tau):
            gx = self._eval(self.problem.nu_grad_x, tau)
            gv = self._eval(self.problem.nu_grad_v, tau)
            return np.concatenate([gx, -(self.t - tau) * gx + gv])

        out = _quad_vec(integrand, s, self.t)
        return out[:3], out[3:]

    def source_integral(self, lo: float) -> float:
        """∫_lo^t e^{−A(s)} H(s, X(s), v) ds."""
        if self.problem.source is None:
            return 0.0
        return _quad(lambda s: math.exp(-self.attenuation(s)) * float(self._eval(self.problem.source, s)), lo, self.t)

    def source_gradient(self, lo: float) -> Tuple[np.ndarray, np.ndarray]:
        """∇ de ∫_lo^t e^{−A(s)} H ds com lo fixo."""
        if self.problem.source is None:
            return np.zeros(3), np.zeros(3)
        p = self.problem

        def integrand(s):
            h = float(self._eval(p.source, s))
            hx = self._eval(p.source_grad_x, s)
            hv = -(self.t - s) * hx + self._eval(p.source_grad_v, s)
            ax, av = self.grad_attenuation(s)
            return math.exp(-self.attenuation(s)) * np.concatenate([hx - h * ax, hv - h * av])

        out = _quad_vec(integrand, lo, self.t)
        return out[:3], out[3:]


def solve_inflow(sampler: FieldSampler, t: float, p: PhasePoint) -> float:
    """
    Fórmula de Duhamel com dado de entrada g.

    f = e^{−A(0)} f₀(x−tv, v) + ∫₀ᵗ e^{−A(s)}H ds              (t < t_b)
    f = e^{−A(t−t_b)} g(t−t_b, x_b, v) + ∫_{t−t_b}^t e^{−A(s)}H ds  (t ≥ t_b)

    Raises:
        QuadratureFailure: Se a quadratura adaptativa não convergir
    """
    problem = sampler.problem
    rec = trace_exits(problem.domain, p.x[None, :], p.v[None, :]).record(0)
    ch = _Characteristic(problem, t, p.x, p.v)
    if t < rec.t_exit:
        head = math.exp(-ch.attenuation(0.0)) * float(problem.init(ch.point(0.0), p.v[None, :])[0])
        return head + ch.source_integral(0.0)
    lo = t - rec.t_exit
    head = math.exp(-ch.attenuation(lo)) * float(problem.inflow(np.array([lo]), rec.x_exit[None, :], p.v[None, :])[0])
    return head + ch.source_integral(lo)


def _gauss(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Nós (n, q) e pesos (n, q) de Gauss-Legendre em [a, b] por linha."""
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_NODES)
    half = 0.5 * (b - a)[:, None]
    mid = 0.5 * (b + a)[:, None]
    return mid + half * nodes[None, :], half * weights[None, :]


def _batch_attenuation(problem: TransportProblem, t: np.ndarray, x: np.ndarray, v: np.ndarray, lo: np.ndarray) -> np.ndarray:
    """∫_lo^t ν(τ, x−(t−τ)v, v) dτ em lote."""
    if problem.nu_constant is not None:
        return problem.nu_constant * (t - lo)
    tau, w = _gauss(lo, t)
    n, q = tau.shape
    pts = (x[:, None, :] - (t[:, None] - tau)[:, :, None] * v[:, None, :]).reshape(-1, 3)
    vals = problem.nu(tau.ravel(), pts, np.repeat(v, q, axis=0)).reshape(n, q)
    return (vals * w).sum(axis=1)


def _batch_source(problem: TransportProblem, t: np.ndarray, x: np.ndarray, v: np.ndarray, lo: np.ndarray) -> np.ndarray:
    if problem.source is None:
        return np.zeros(len(x))
    s, w = _gauss(lo, t)
    n, q = s.shape
    flat_s = s.ravel()
    rep_x = np.repeat(x, q, axis=0)
    rep_v = np.repeat(v, q, axis=0)
    rep_t = np.repeat(t, q)
    pts = rep_x - (rep_t - flat_s)[:, None] * rep_v
    att = _batch_attenuation(problem, rep_t, rep_x, rep_v, flat_s)
    vals = np.exp(-att) * problem.source(flat_s, pts, rep_v)
    return (vals.reshape(n, q) * w).sum(axis=1)


def inflow_batch(problem: TransportProblem, t, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Avaliador em lote do modo inflow (Gauss-Legendre ao longo das características)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), (len(x),)).astype(float)
    exits = trace_exits(problem.domain, x, v)
    before = t < exits.t
    lo = np.where(before, 0.0, t - np.where(np.isfinite(exits.t), exits.t, 0.0))
    out = np.zeros(len(x))
    att = _batch_attenuation(problem, t, x, v, lo)
    rows = np.nonzero(before)[0]
    if len(rows):
        out[rows] = np.exp(-att[rows]) * problem.init(x[rows] - t[rows, None] * v[rows], v[rows])
    rows = np.nonzero(~before)[0]
    if len(rows):
        out[rows] = np.exp(-att[rows]) * problem.inflow(lo[rows], exits.x_exit[rows], v[rows])
    return out + _batch_source(problem, t, x, v, lo)


def sample_diffuse_velocity(normal: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """u com densidade c_μ μ(u)(n·u) em n·u > 0 (componente normal de Rayleigh, tangenciais normais)."""
    n = len(normal)
    helper = np.where(np.abs(normal[:, :1]) < 0.9, np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 1.0, 0.0]]))
    t1 = helper - (helper * normal).sum(axis=1)[:, None] * normal
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(normal, t1)
    un = np.sqrt(-2.0 * np.log1p(-rng.random(n)))
    a, b = rng.standard_normal(n), rng.standard_normal(n)
    return un[:, None] * normal + a[:, None] * t1 + b[:, None] * t2


def diffuse_paths(sampler: FieldSampler, t: np.ndarray, x: np.ndarray, v: np.ndarray, rng: np.random.Generator):
    """
    Um caminho por linha do estimador recursivo; devolve (contribuições, esgotado, peso no esgotamento).

    Em cada reemissão o peso é multiplicado por √μ(v)/√μ(u) (e pelo peso de
    reemissão opcional, usado pela iteração regularizada).
    """
    problem = sampler.problem
    domain = problem.domain
    n = len(x)
    t = np.asarray(t, dtype=float).copy()
    x = x.copy()
    v = v.copy()
    weight = np.ones(n)
    total = np.zeros(n)
    exhausted = np.zeros(n, dtype=bool)
    exhausted_weight = np.zeros(n)
    active = np.ones(n, dtype=bool)
    for bounce in range(sampler.depth + 1):
        rows = np.nonzero(active)[0]
        if len(rows) == 0:
            break
        exits = trace_exits(domain, x[rows], v[rows])
        tb = exits.t
        before = t[rows] < tb
        lo = np.where(before, 0.0, t[rows] - np.where(np.isfinite(tb), tb, 0.0))
        att = _batch_attenuation(problem, t[rows], x[rows], v[rows], lo)
        total[rows] += weight[rows] * _batch_source(problem, t[rows], x[rows], v[rows], lo)
        done = rows[before]
        if len(done):
            total[done] += weight[done] * np.exp(-att[before]) * problem.init(x[done] - t[done, None] * v[done], v[done])
            active[done] = False
        hit = rows[~before]
        if len(hit) == 0:
            continue
        if bounce == sampler.depth:
            exhausted[hit] = True
            exhausted_weight[hit] = weight[hit] * np.exp(-att[~before])
            active[hit] = False
            continue
        xb = exits.x_exit[~before]
        u = sample_diffuse_velocity(exits.normal[~before], rng)
        factor = np.exp(-att[~before]) * sqrt_maxwellian(v[hit]) / sqrt_maxwellian(u)
        if sampler.reemission_weight is not None:
            factor = factor * sampler.reemission_weight(xb, v[hit])
        weight[hit] *= factor
        t[hit] = lo[~before]
        x[hit] = xb
        v[hit] = u
    return total, exhausted, exhausted_weight


def solve_diffuse(sampler: FieldSampler, t: float, p: PhasePoint, name: str = "solve_diffuse") -> DiffuseEstimate:
    """
    Estimador recursivo para trás do modo difuso com sampler.samples caminhos.

    Caminhos que ainda atingem a fronteira na profundidade máxima são
    truncados (contribuição zero); a cota de truncamento usa sup|f|.
    """
    rng = stream(sampler.seed, name)
    m = int(sampler.samples)
    x = np.repeat(p.x[None, :], m, axis=0)
    v = np.repeat(p.v[None, :], m, axis=0)
    total, exhausted, ex_weight = diffuse_paths(sampler, np.full(m, float(t)), x, v, rng)
    bound = float((ex_weight * sampler.problem.sup_bound).mean())
    return DiffuseEstimate(
        value=float(total.mean()),
        std_error=float(total.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0,
        depth_exhausted=bool(exhausted.any()),
        exhausted_fraction=float(exhausted.mean()),
        truncation_bound=bound,
    )


def diffuse_normalization(normal: np.ndarray, n: int = 200_000, seed: int = 0) -> float:
    """c_μ∫_{n·u>0} μ(u)(n·u) du por Monte Carlo gaussiano (alvo: 1)."""
    rng = stream(seed, "diffuse_normalization")
    u = rng.standard_normal((n, 3))
    un = u @ (np.asarray(normal, dtype=float) / np.linalg.norm(normal))
    # μ(u) = (2π)^{3/2}·densidade N(0, I)
    values = (2.0 * math.pi) ** 1.5 * np.where(un > 0, un, 0.0)
    return float(C_MU * values.mean())


def boundary_gradient(problem: TransportProblem, t: float, x: np.ndarray, v: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """
    ∇ₓg em γ₋ reconstruído pela equação:
    Σ τᵢ∂_{τᵢ}g + n/(n·v){−∂_t g − Σ(v·τᵢ)∂_{τᵢ}g − νg + H}.
    """
    x = np.asarray(x, dtype=float)[None, :]
    v = np.asarray(v, dtype=float)[None, :]
    n = np.asarray(normal, dtype=float)
    tt = np.array([t])
    full = problem.inflow_grad_x(tt, x, v)[0]
    tangential = full - (full @ n) * n
    vn = float(v[0] @ n)
    g = float(problem.inflow(tt, x, v)[0])
    h = float(problem.source(tt, x, v)[0]) if problem.source is not None else 0.0
    nu = float(problem.nu(tt, x, v)[0])
    normal_part = -float(problem.inflow_dt(tt, x, v)[0]) - float(v[0] @ tangential) - nu * g + h
    return tangential + n * normal_part / vn


def derivative_field(sampler: FieldSampler, t: float, p: PhasePoint) -> Tuple[np.ndarray, np.ndarray]:
    """
    (∇ₓf, ∇ᵥf) do modo inflow pelas fórmulas fechadas, longe de t = t_b.

    Raises:
        NearSingularTime: Se |t − t_b| ≤ tol_t
        GrazingRay: Se t > t_b e o traçado for rasante
    """
    problem = sampler.problem
    deriv = exit_derivatives_batch(problem.domain, p.x[None, :], p.v[None, :])
    rec = deriv["exits"].record(0)
    if abs(t - rec.t_exit) <= settings.tol_t:
        raise NearSingularTime(f"|t − t_b| = {abs(t - rec.t_exit):.3e} ≤ tol_t")
    ch = _Characteristic(problem, t, p.x, p.v)
    v_row = p.v[None, :]

    if t < rec.t_exit:
        base = ch.point(0.0)
        f0 = float(problem.init(base, v_row)[0])
        gx0 = problem.init_grad_x(base, v_row)[0]
        gv0 = problem.init_grad_v(base, v_row)[0]
        decay = math.exp(-ch.attenuation(0.0))
        ax, av = ch.grad_attenuation(0.0)
        sx, sv = ch.source_gradient(0.0)
        grad_x = decay * (gx0 - ax * f0) + sx
        grad_v = decay * (-t * gx0 + gv0 - av * f0) + sv
        return grad_x, grad_v

    if not deriv["valid"][0]:
        raise GrazingRay(f"Traçado rasante: |n(x_b)·v| = {abs(rec.speed_normal):.3e}")
    lo = t - rec.t_exit
    # ∇L = −∇t_b para o limite inferior L = t − t_b
    dl_x = -deriv["grad_x_tb"][0]
    dl_v = -deriv["grad_v_tb"][0]
    jx = deriv["grad_x_xb"][0]
    jv = deriv["grad_v_xb"][0]
    tl = np.array([lo])
    xb = rec.x_exit[None, :]
    g = float(problem.inflow(tl, xb, v_row)[0])
    g_t = float(problem.inflow_dt(tl, xb, v_row)[0])
    g_x = problem.inflow_grad_x(tl, xb, v_row)[0]
    g_v = problem.inflow_grad_v(tl, xb, v_row)[0]
    nu_l = float(problem.nu(tl, xb, v_row)[0])
    h_l = float(problem.source(tl, xb, v_row)[0]) if problem.source is not None else 0.0
    decay = math.exp(-ch.attenuation(lo))
    ax, av = ch.grad_attenuation(lo)
    sx, sv = ch.source_gradient(lo)

    grad_x = decay * ((-ax + nu_l * dl_x) * g + g_t * dl_x + jx.T @ g_x) + sx - decay * h_l * dl_x
    grad_v = decay * ((-av + nu_l * dl_v) * g + g_t * dl_v + jv.T @ g_x + g_v) + sv - decay * h_l * dl_v
    return grad_x, grad_v


def derivative_field_fd(sampler: FieldSampler, t: float, p: PhasePoint, h: float = 1e-6) -> Tuple[np.ndarray, np.ndarray]:
    """Diferenças centrais de solve_inflow (oráculo de auditoria)."""
    base = p.as_vector()
    grad = np.zeros(6)
    for k in range(6):
        e = np.zeros(6)
        e[k] = h
        plus = solve_inflow(sampler, t, PhasePoint(base[:3] + e[:3], base[3:] + e[3:]))
        minus = solve_inflow(sampler, t, PhasePoint(base[:3] - e[:3], base[3:] - e[3:]))
        grad[k] = (plus - minus) / (2.0 * h)
    return grad[:3], grad[3:]


def evaluate_batch(sampler: FieldSampler, t, x: np.ndarray, v: np.ndarray, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    f(t, x, v) em lote: exato no modo inflow, um caminho não enviesado por linha no difuso.

    Integrais de Monte Carlo sobre f usam este avaliador diretamente.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), (len(x),)).astype(float)
    if sampler.mode == "inflow":
        return inflow_batch(sampler.problem, t, x, v)
    rng = rng if rng is not None else stream(sampler.seed, "evaluate_batch")
    total, _, _ = diffuse_paths(sampler, t, x, v, rng)
    return total
