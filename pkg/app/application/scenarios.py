"""
Galeria de cenários de transporte.

Todos os dados estão em forma fechada:

- maxwellian-check: fronteira difusa, ν = 0, H = 0, f₀ = √μ(v) = e^{−|v|²/4}.
  Solução estacionária f ≡ √μ(v).
- jump-bump: fronteira de entrada, ν = 0, H = 0, g = 0,
  f₀ = e^{−|x|²/4}·e^{−|v|²/2}. Dado incompatível em γ₀ que forma saltos
  através de 𝔖_B no domínio com saliência; avaliado em t = 0,5.
- free-streaming: fronteira de entrada, ν = 0, H = 0, f₀ como em jump-bump e
  g(t,x,v) = f₀(x − tv, v). Solução f = f₀(x − tv, v), contínua.
- green: fronteira de entrada, ν ≡ 1/2, H = e^{−|v|²/2}/10, f₀ e g como em
  free-streaming.
- pure-transport: ν = 0, H = 0, g = 0, f₀ ≡ 1, f = 𝟙_{t < t_b}.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from app.application.transport import TransportProblem, sqrt_maxwellian
from app.domain.models import Domain


def _gauss_x(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.25 * (np.atleast_2d(x) ** 2).sum(axis=1))


def _gauss_v(v: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * (np.atleast_2d(v) ** 2).sum(axis=1))


def bump_datum(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """f₀(x, v) = e^{−|x|²/4}·e^{−|v|²/2}."""
    return _gauss_x(x) * _gauss_v(v)


def bump_datum_grad_x(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return -0.5 * np.atleast_2d(x) * bump_datum(x, v)[:, None]


def bump_datum_grad_v(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return -np.atleast_2d(v) * bump_datum(x, v)[:, None]


def _streamed(t: np.ndarray, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.atleast_2d(x) - np.asarray(t, dtype=float).reshape(-1, 1) * np.atleast_2d(v)


def streaming_inflow(t, x, v):
    """g(t, x, v) = f₀(x − tv, v)."""
    return bump_datum(_streamed(t, x, v), v)


def streaming_inflow_dt(t, x, v):
    base = _streamed(t, x, v)
    return -(bump_datum_grad_x(base, v) * np.atleast_2d(v)).sum(axis=1)


def streaming_inflow_grad_x(t, x, v):
    return bump_datum_grad_x(_streamed(t, x, v), v)


def streaming_inflow_grad_v(t, x, v):
    base = _streamed(t, x, v)
    return -np.asarray(t, dtype=float).reshape(-1, 1) * bump_datum_grad_x(base, v) + bump_datum_grad_v(base, v)


def _ones(x, v):
    return np.ones(len(np.atleast_2d(x)))


def _maxwell_source(t, x, v):
    return 0.1 * _gauss_v(v)


def _maxwell_source_grad_v(t, x, v):
    return -0.1 * np.atleast_2d(v) * _gauss_v(v)[:, None]


def maxwellian_check(domain: Domain) -> TransportProblem:
    return TransportProblem(
        domain=domain,
        init=lambda x, v: sqrt_maxwellian(v),
        boundary="diffuse",
        sup_bound=1.0,
        name="maxwellian-check",
    )


def jump_bump(domain: Domain) -> TransportProblem:
    return TransportProblem(
        domain=domain,
        init=bump_datum,
        init_grad_x=bump_datum_grad_x,
        init_grad_v=bump_datum_grad_v,
        sup_bound=1.0,
        name="jump-bump",
    )


def free_streaming(domain: Domain) -> TransportProblem:
    return TransportProblem(
        domain=domain,
        init=bump_datum,
        init_grad_x=bump_datum_grad_x,
        init_grad_v=bump_datum_grad_v,
        inflow=streaming_inflow,
        inflow_dt=streaming_inflow_dt,
        inflow_grad_x=streaming_inflow_grad_x,
        inflow_grad_v=streaming_inflow_grad_v,
        sup_bound=1.0,
        name="free-streaming",
    )


def green(domain: Domain) -> TransportProblem:
    return TransportProblem(
        domain=domain,
        init=bump_datum,
        init_grad_x=bump_datum_grad_x,
        init_grad_v=bump_datum_grad_v,
        nu_constant=0.5,
        source=_maxwell_source,
        source_grad_v=_maxwell_source_grad_v,
        inflow=streaming_inflow,
        inflow_dt=streaming_inflow_dt,
        inflow_grad_x=streaming_inflow_grad_x,
        inflow_grad_v=streaming_inflow_grad_v,
        sup_bound=1.0,
        name="green",
    )


def pure_transport(domain: Domain) -> TransportProblem:
    return TransportProblem(domain=domain, init=_ones, sup_bound=1.0, name="pure-transport")


@dataclass(frozen=True)
class Scenario:
    """Cenário da galeria: construtor do problema e domínio padrão."""
    name: str
    build: Callable[[Domain], TransportProblem]
    domain_kind: str
    description: str


SCENARIOS: Dict[str, Scenario] = {
    "maxwellian-check": Scenario("maxwellian-check", maxwellian_check, "graph-bump", "difusa, f₀ = √μ(v), f ≡ √μ(v)"),
    "jump-bump": Scenario("jump-bump", jump_bump, "graph-bump", "entrada, g = 0, f₀ = e^{−|x|²/4}e^{−|v|²/2}"),
    "free-streaming": Scenario("free-streaming", free_streaming, "analytic-ball", "entrada, g = f₀(x − tv, v)"),
    "green": Scenario("green", green, "analytic-ball", "entrada, ν = 1/2, H = e^{−|v|²/2}/10"),
    "pure-transport": Scenario("pure-transport", pure_transport, "analytic-ball", "f₀ ≡ 1, f = 𝟙_{t < t_b}"),
}


def scenario_names() -> List[str]:
    return sorted(SCENARIOS)


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ValueError(f"Cenário desconhecido: {name} (disponíveis: {', '.join(scenario_names())})") from None
