"""
Serviços da aplicação: construção de domínios e verificações por módulo.
"""
import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from app.application import transport_diagnostics as diagnostics
from app.application.cover import (
    build_cover,
    check_cone_bound,
    check_distance,
    check_inclusion,
    check_nesting,
    check_tiling,
    estimate_boundary_measure,
    estimate_cover_measure,
    ladder_ratios,
    loglog_slope,
)
from app.application.cutoff import build_cutoff, lipschitz_audit, mass_check, vanishing_audit, w11_report
from app.application.dtos import DomainSpec, ExperimentConfig
from app.application.geometry import build_domain, geometry_info
from app.application.measure_lab import (
    PSI_GALLERY,
    grazing_velocity_measure,
    injectivity_audit,
    jacobian_audit,
    pushforward_check,
    small_sup_estimate,
    tube_volume_transfer,
)
from app.application.raytrace import (
    check_involution,
    dense_exit_oracle,
    exit_derivatives_batch,
    exit_derivatives_fd,
    sample_rays,
    trace_exits,
)
from app.application.scenarios import free_streaming, get_scenario, green, jump_bump, maxwellian_check, pure_transport
from app.application.singular import audit_residuals, codim_audit, sample_singular_set
from app.application.transport import (
    FieldSampler,
    derivative_field,
    derivative_field_fd,
    solve_diffuse,
    solve_inflow,
    sqrt_maxwellian,
)
from app.core.exceptions import (
    CoverError,
    GeometryError,
    GrazingRay,
    NearSingularTime,
    SamplingError,
    TransportError,
)
from app.core.rng import stream
from app.core.settings import settings
from app.domain.models import CheckResult, CoverParams, Domain, PhasePoint, SingularSampleSet

logger = logging.getLogger(__name__)

# Erros que reprovam uma verificação sem interromper a suíte
CHECK_ERRORS = (GeometryError, SamplingError, CoverError, TransportError)

TRANSPORT_SPEED = 3.0

# |n(x_b)·v|/|v| mínimo para a comparação com diferenças centrais de passo 1e−5
DERIVATIVE_AUDIT_INCIDENCE = 0.1


@lru_cache(maxsize=8)
def _cached_domain(kind: str, params: Tuple[Tuple[str, float], ...], delta: Optional[float], grid: Optional[int]) -> Domain:
    return build_domain(kind, dict(params), delta=delta, grid=grid)


class DomainService:
    """Constrói (e reaproveita) domínios da galeria."""

    def build(self, spec: DomainSpec) -> Domain:
        """
        Constrói o domínio descrito por `spec`.

        Raises:
            GeometryError: Se a decomposição em cartas falhar
        """
        params = tuple(sorted(spec.params.items()))
        return _cached_domain(spec.kind, params, spec.delta, spec.chart_grid)


@dataclass
class SuiteContext:
    """Estado compartilhado entre os módulos de uma execução."""
    domain: Domain
    config: ExperimentConfig
    samples: Optional[SingularSampleSet] = None
    covers: Dict[float, Any] = field(default_factory=dict)
    dumps: Dict[str, Tuple[List[str], np.ndarray]] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def threads(self) -> int:
        return self.config.threads


def _timed(name: str, fn: Callable[[], CheckResult]) -> CheckResult:
    started = time.perf_counter()
    try:
        result = fn()
    except CHECK_ERRORS as e:
        logger.warning(f"{name}: {type(e).__name__}: {e}")
        result = CheckResult(name=name, estimate=None, std_error=None, threshold=None, passed=False,
                             details={"error": type(e).__name__, "message": str(e)})
    result.wall_time = time.perf_counter() - started
    logger.info(f"{name}: {'ok' if result.passed else 'FALHOU'} ({result.wall_time:.2f}s)")
    return result


def _exact_area(domain: Domain) -> Optional[float]:
    shape = domain.shape
    if domain.kind == "analytic-ball":
        return 4.0 * math.pi * shape.radius ** 2
    if domain.kind == "flat-slab":
        return 2.0 * (2.0 * shape.half_period) ** 2
    return None


class SuiteService:
    """Executa as verificações de cada módulo sobre um contexto."""

    def __init__(self, domain_service: DomainService):
        """
        Inicializa o serviço.

        Args:
            domain_service: Construtor de domínios
        """
        self.domain_service = domain_service
        self.modules: Dict[str, Callable[[SuiteContext], List[CheckResult]]] = {
            "geometry": self.geometry_checks,
            "raytrace": self.raytrace_checks,
            "singular": self.singular_checks,
            "cover": self.cover_checks,
            "cutoff": self.cutoff_checks,
            "measure": self.measure_checks,
            "transport": self.transport_checks,
            "scenario": lambda ctx: self.scenario_checks(ctx, ctx.config.transport.scenario),
        }

    def context(self, config: ExperimentConfig) -> SuiteContext:
        return SuiteContext(domain=self.domain_service.build(config.domain), config=config)

    def run_module(self, name: str, ctx: SuiteContext) -> List[CheckResult]:
        logger.info(f"Módulo {name}: início")
        return self.modules[name](ctx)

    # Geometria

    def geometry_checks(self, ctx: SuiteContext) -> List[CheckResult]:
        domain = ctx.domain

        def info() -> CheckResult:
            summary = geometry_info(domain, ctx.seed)
            return CheckResult("geometry.info", summary["chart_count"], None, settings.delta_min,
                               passed=summary["chart_count"] > 0 and summary["delta"] >= settings.delta_min,
                               details=summary)

        def area() -> CheckResult:
            summary = geometry_info(domain, ctx.seed)
            exact = _exact_area(domain)
            estimate, se = summary["surface_area"], summary["surface_area_std_error"]
            if exact is None:
                passed = math.isfinite(estimate) and estimate > 0
            else:
                passed = abs(estimate - exact) <= 4.0 * se + 1e-6 * exact
            return CheckResult("geometry.surface_area", estimate, se, exact, passed)

        return [_timed("geometry.info", info), _timed("geometry.surface_area", area)]

    # Traçado de raios

    def _rays(self, ctx: SuiteContext, name: str, n: int, v_max: Optional[float] = None):
        return sample_rays(ctx.domain, n, stream(ctx.seed, name), v_max)

    def raytrace_checks(self, ctx: SuiteContext) -> List[CheckResult]:
        domain = ctx.domain
        n = ctx.config.budgets.rays

        def derivatives() -> CheckResult:
            x, v = self._rays(ctx, "suite_derivatives", n)
            blocks = exit_derivatives_batch(domain, x, v)
            with np.errstate(invalid="ignore"):
                incidence = np.abs(blocks["exits"].speed_normal) / np.linalg.norm(v, axis=1)
            audited = blocks["valid"] & (incidence >= DERIVATIVE_AUDIT_INCIDENCE)
            errors = []
            for i in np.nonzero(audited)[0]:
                fd = exit_derivatives_fd(domain, PhasePoint(x[i], v[i]))
                exact = (blocks["grad_x_tb"][i], blocks["grad_v_tb"][i], blocks["grad_x_xb"][i], blocks["grad_v_xb"][i])
                errors.append(max(np.linalg.norm(a - b) / max(np.linalg.norm(a), 1e-12) for a, b in zip(exact, fd)))
            errors = np.asarray(errors)
            worst = float(errors.max()) if len(errors) else float("inf")
            return CheckResult("raytrace.derivatives", worst, None, 1e-4, len(errors) > 0 and worst < 1e-4,
                               details={"n": int(len(errors)), "rays": int(n),
                                        "near_grazing_excluded": int((blocks["valid"] & ~audited).sum()),
                                        "min_incidence": DERIVATIVE_AUDIT_INCIDENCE})

        def oracle() -> CheckResult:
            x, v = self._rays(ctx, "suite_oracle", min(n, 500))
            fast = trace_exits(domain, x, v).t
            dense = dense_exit_oracle(domain, x, v)
            both = np.isfinite(fast) & np.isfinite(dense)
            speed = np.linalg.norm(v, axis=1)
            gap = np.abs(fast[both] - dense[both]) * speed[both] / domain.diam
            worst = float(gap.max()) if len(gap) else 0.0
            agree = bool(np.array_equal(np.isfinite(fast), np.isfinite(dense)))
            return CheckResult("raytrace.oracle", worst, None, 1e-8, worst < 1e-8 and agree,
                               details={"n": int(both.sum()), "finite_pattern_agrees": agree})

        def involution() -> CheckResult:
            x, v = self._rays(ctx, "suite_involution", n)
            summary = check_involution(domain, x, v)
            bound = 1e-7 * domain.diam
            return CheckResult("raytrace.involution", summary["max_position_error"], None, bound,
                               summary["max_position_error"] <= bound, details=summary)

        return [_timed("raytrace.derivatives", derivatives), _timed("raytrace.oracle", oracle),
                _timed("raytrace.involution", involution)]

    # Conjunto singular

    def singular_samples(self, ctx: SuiteContext) -> SingularSampleSet:
        if ctx.samples is None:
            ctx.samples = sample_singular_set(ctx.domain, ctx.config.budgets.singular, ctx.seed, threads=ctx.threads)
            ctx.dumps["singular_samples"] = (
                ["x1", "x2", "x3", "v1", "v2", "v3", "chart_id", "theta", "r_v", "s", "residual"],
                np.column_stack([ctx.samples.x, ctx.samples.v, ctx.samples.chart_id, ctx.samples.theta,
                                 ctx.samples.r_v, ctx.samples.s, ctx.samples.residual]),
            )
        return ctx.samples

    def singular_checks(self, ctx: SuiteContext) -> List[CheckResult]:
        def residuals() -> CheckResult:
            summary = audit_residuals(self.singular_samples(ctx))
            return CheckResult("singular.residuals", summary["pass_fraction"], None, 0.99,
                               summary["pass_fraction"] >= 0.99, details=summary)

        def codim() -> CheckResult:
            summary = codim_audit(ctx.domain, self.singular_samples(ctx))
            if summary["n"] == 0:
                # só é aceitável onde a forma não tem pontos estritamente não convexos
                applicable = ctx.domain.shape is None or ctx.domain.shape.has_nonconvex_points
                return CheckResult("singular.codim", None, None, 1e-6, not applicable,
                                   details={**summary, "applicable": applicable,
                                            "note": "sem lançamentos estritamente não convexos"})
            passed = summary["min_normal_norm"] > 0 and summary["min_singular_value"] > 1e-6
            return CheckResult("singular.codim", summary["min_singular_value"], None, 1e-6, passed, details=summary)

        return [_timed("singular.residuals", residuals), _timed("singular.codim", codim)]

    # Recobrimento

    def cover_params(self, ctx: SuiteContext, eps: float) -> CoverParams:
        return CoverParams(
            eps=eps,
            eps1=eps,
            delta=ctx.domain.delta,
            c_eta=ctx.domain.c_eta,
            c_star=settings.c_star,
            s_star=settings.s_star,
            theta_w=settings.theta_w,
            v_max=settings.v_max,
        )

    def cover(self, ctx: SuiteContext, eps: float):
        if eps not in ctx.covers:
            ctx.covers[eps] = build_cover(ctx.domain, self.cover_params(ctx, eps))
        return ctx.covers[eps]

    def cover_checks(self, ctx: SuiteContext) -> List[CheckResult]:
        budgets = ctx.config.budgets
        results: List[CheckResult] = []
        measures: Dict[float, Dict[str, float]] = {}
        boundary: Dict[float, Dict[str, float]] = {}

        for eps in ctx.config.ladders.eps:
            def inclusion(eps=eps) -> CheckResult:
                summary = check_inclusion(self.cover(ctx, eps), self.singular_samples(ctx), ctx.threads)
                return CheckResult(f"cover.inclusion[{eps:g}]", summary["fraction"], None, 1.0,
                                   summary["fraction"] == 1.0, details=summary)

            def cone(eps=eps) -> CheckResult:
                summary = check_cone_bound(self.cover(ctx, eps), budgets.cover, ctx.seed, ctx.threads)
                # sem membros testados não há o que aprovar
                return CheckResult(f"cover.cone[{eps:g}]", summary["violations"], None, 0,
                                   summary["n_tested"] > 0 and summary["violations"] == 0
                                   and summary["hypothesis_members"] == 0, details=summary)

            def measure(eps=eps) -> CheckResult:
                summary = estimate_cover_measure(self.cover(ctx, eps), budgets.cover, ctx.seed, ctx.threads)
                measures[eps] = summary
                return CheckResult(f"cover.measure[{eps:g}]", summary["estimate"], summary["std_error"], None,
                                   math.isfinite(summary["estimate"]), details=summary)

            def nesting(eps=eps) -> CheckResult:
                summary = check_nesting(self.cover(ctx, eps), self.singular_samples(ctx), budgets.cover, ctx.seed)
                return CheckResult(f"cover.nesting[{eps:g}]", summary["violations"], None, 0,
                                   summary["violations"] == 0, details=summary)

            def distance(eps=eps) -> CheckResult:
                summary = check_distance(self.cover(ctx, eps), self.singular_samples(ctx), budgets.cover,
                                         ctx.seed, ctx.threads)
                return CheckResult(f"cover.distance[{eps:g}]", summary["ratio"], None, None,
                                   summary["min_distance"] > 0.0, details=summary)

            def boundary_measure(eps=eps) -> CheckResult:
                summary = estimate_boundary_measure(self.cover(ctx, eps), budgets.cover, ctx.seed, ctx.threads)
                boundary[eps] = summary
                return CheckResult(f"cover.boundary_measure[{eps:g}]", summary["estimate"], summary["std_error"],
                                   None, math.isfinite(summary["estimate"]), details=summary)

            results += [_timed(f"cover.inclusion[{eps:g}]", inclusion), _timed(f"cover.cone[{eps:g}]", cone),
                        _timed(f"cover.nesting[{eps:g}]", nesting), _timed(f"cover.distance[{eps:g}]", distance),
                        _timed(f"cover.measure[{eps:g}]", measure),
                        _timed(f"cover.boundary_measure[{eps:g}]", boundary_measure)]

        def tiling() -> CheckResult:
            fraction = check_tiling(self.cover(ctx, ctx.config.ladders.eps[0]))
            return CheckResult("cover.tiling", fraction, None, 1.0, fraction == 1.0)

        def slope(name: str, source: Dict[float, Dict[str, float]]) -> Callable[[], CheckResult]:
            def check() -> CheckResult:
                levels = sorted(source)
                values = [source[e]["estimate"] for e in levels]
                if len(levels) < 2 or min(values) <= 0:
                    return CheckResult(name, None, None, [0.7, 1.5], False,
                                       details={"levels": levels, "estimates": values})
                fitted = loglog_slope(levels, values)
                return CheckResult(name, fitted, None, [0.7, 1.5], 0.7 <= fitted <= 1.5,
                                   details={"levels": levels, "estimates": values})
            return check

        def ratio(name: str, source: Dict[float, Dict[str, float]]) -> Callable[[], CheckResult]:
            def check() -> CheckResult:
                levels = sorted(source, reverse=True)
                summary = ladder_ratios(levels, [source[e]["estimate"] for e in levels],
                                        [source[e]["std_error"] for e in levels])
                return CheckResult(name, [p["ratio"] for p in summary["pairs"]], None,
                                   [p["predicted"] for p in summary["pairs"]], summary["passed"], details=summary)
            return check

        results += [_timed("cover.tiling", tiling),
                    _timed("cover.measure_slope", slope("cover.measure_slope", measures)),
                    _timed("cover.measure_ratio", ratio("cover.measure_ratio", measures)),
                    _timed("cover.boundary_slope", slope("cover.boundary_slope", boundary)),
                    _timed("cover.boundary_ratio", ratio("cover.boundary_ratio", boundary))]
        return results

    # Corte

    def cutoff_checks(self, ctx: SuiteContext) -> List[CheckResult]:
        budgets = ctx.config.budgets
        results: List[CheckResult] = []
        reports: Dict[float, Dict[str, Dict[str, float]]] = {}

        def mass() -> CheckResult:
            eps = ctx.config.ladders.eps[0]
            value, se = mass_check(eps, 20_000, ctx.seed)
            return CheckResult("cutoff.mass", value, se, 1.0, abs(value - 1.0) <= 3.0 * se + 1e-9)

        results.append(_timed("cutoff.mass", mass))
        for eps in ctx.config.ladders.eps:
            def vanishing(eps=eps) -> CheckResult:
                field_ = build_cutoff(self.cover(ctx, eps))
                subset = self.singular_samples(ctx).head(budgets.cutoff)
                summary = vanishing_audit(field_, subset, ctx.seed)
                return CheckResult(f"cutoff.vanishing[{eps:g}]", summary["max_value"], None, 0.0,
                                   summary["zero_fraction"] == 1.0, details=summary)

            def w11(eps=eps) -> CheckResult:
                report = w11_report(build_cutoff(self.cover(ctx, eps)), budgets.cutoff, ctx.seed, ctx.threads)
                reports[eps] = report
                gradient = report["bulk_gradient"]
                return CheckResult(f"cutoff.w11[{eps:g}]", gradient["estimate"], gradient["std_error"], None,
                                   math.isfinite(gradient["estimate"]), details=report)

            def lipschitz(eps=eps) -> CheckResult:
                summary = lipschitz_audit(build_cutoff(self.cover(ctx, eps)), budgets.cutoff, ctx.seed)
                return CheckResult(f"cutoff.lipschitz[{eps:g}]", summary["max_ratio"], None, summary["bound"],
                                   summary["violations"] == 0, details=summary)

            results += [_timed(f"cutoff.vanishing[{eps:g}]", vanishing), _timed(f"cutoff.w11[{eps:g}]", w11),
                        _timed(f"cutoff.lipschitz[{eps:g}]", lipschitz)]

        def bounded() -> CheckResult:
            values = [reports[e]["bulk_gradient"]["estimate"] for e in sorted(reports)]
            if len(values) < 2 or min(values) <= 0:
                return CheckResult("cutoff.w11_bounded", None, None, 2.0, False, details={"estimates": values})
            spread = max(values) / min(values)
            return CheckResult("cutoff.w11_bounded", spread, None, 2.0, spread <= 2.0, details={"estimates": values})

        def complement() -> CheckResult:
            levels = sorted(reports)
            values = [reports[e]["bulk_complement"]["estimate"] for e in levels]
            if len(levels) < 2 or min(values) <= 0:
                return CheckResult("cutoff.complement_slope", None, None, [0.7, 1.5], False,
                                   details={"estimates": values})
            fitted = loglog_slope(levels, values)
            return CheckResult("cutoff.complement_slope", fitted, None, [0.7, 1.5], 0.7 <= fitted <= 1.5,
                               details={"levels": levels, "estimates": values})

        results += [_timed("cutoff.w11_bounded", bounded), _timed("cutoff.complement_slope", complement)]
        return results

    # Mudança de variáveis e medidas

    def measure_checks(self, ctx: SuiteContext) -> List[CheckResult]:
        domain = ctx.domain
        n = ctx.config.budgets.measure
        results: List[CheckResult] = []

        def jacobian() -> CheckResult:
            summary = jacobian_audit(domain, min(n, 1000), ctx.seed)
            return CheckResult("measure.jacobian", summary["fraction_below_1e-3"], None, 0.99,
                               summary["fraction_below_1e-3"] >= 0.99, details=summary)

        def injectivity() -> CheckResult:
            summary = injectivity_audit(domain, min(n, 2000), ctx.seed)
            return CheckResult("measure.injectivity", summary["max_error"], None, 1e-7,
                               summary["max_error"] <= 1e-7, details=summary)

        results += [_timed("measure.jacobian", jacobian), _timed("measure.injectivity", injectivity)]
        for name in ("one", "gaussian"):
            def pushforward(name=name) -> CheckResult:
                summary = pushforward_check(domain, PSI_GALLERY[name], n, ctx.seed, threads=ctx.threads)
                return CheckResult(f"measure.pushforward[{name}]", summary["lhs"], summary["lhs_std_error"],
                                   summary["rhs"], summary["passed"], details=summary)

            results.append(_timed(f"measure.pushforward[{name}]", pushforward))

        def small_sup() -> CheckResult:
            ladder = sorted(ctx.config.ladders.delta, reverse=True)
            rows = [small_sup_estimate(domain, d, max(n // 100, 200), ctx.seed) for d in ladder]
            decreasing = all(b["estimate"] + 3.0 * b["std_error"] < a["estimate"] - 3.0 * a["std_error"]
                             for a, b in zip(rows, rows[1:]))
            return CheckResult("measure.small_sup", [r["estimate"] for r in rows], [r["std_error"] for r in rows],
                               ladder, decreasing, details={"rows": rows})

        def transfer() -> CheckResult:
            summary = tube_volume_transfer(domain, PSI_GALLERY["gaussian"], 0.5, n, ctx.seed, threads=ctx.threads)
            return CheckResult("measure.tube_transfer", summary["lhs"], summary.get("lhs_std_error"),
                               summary["rhs"], summary["passed"], details=summary)

        results += [_timed("measure.small_sup", small_sup), _timed("measure.tube_transfer", transfer)]

        if domain.kind == "analytic-ball":
            for delta in (0.2, 0.1):
                def ball_center(delta=delta) -> CheckResult:
                    exact = 4.0 * math.pi * delta ** 3 / 3.0
                    value, se = grazing_velocity_measure(domain, domain.shape.center, delta, settings.v_max, 2000, ctx.seed)
                    return CheckResult(f"measure.ball_center[{delta:g}]", value, se, exact,
                                       abs(value - exact) <= 3.0 * se + 1e-9 * exact)

                results.append(_timed(f"measure.ball_center[{delta:g}]", ball_center))
        return results

    # Transporte

    def _transport_points(self, ctx: SuiteContext, name: str, n: int) -> Tuple[np.ndarray, np.ndarray]:
        return self._rays(ctx, name, n, TRANSPORT_SPEED)

    def pure_transport_check(self, ctx: SuiteContext) -> CheckResult:
        def run() -> CheckResult:
            t = ctx.config.transport.t
            sampler = FieldSampler(pure_transport(ctx.domain), seed=ctx.seed)
            x, v = self._transport_points(ctx, "suite_pure_transport", min(ctx.config.budgets.transport_points, 200))
            tb = trace_exits(ctx.domain, x, v).t
            values = np.array([solve_inflow(sampler, t, PhasePoint(a, b)) for a, b in zip(x, v)])
            error = float(np.abs(values - (t < tb)).max())
            return CheckResult("transport.pure_transport", error, None, 1e-8, error <= 1e-8)

        return _timed("transport.pure_transport", run)

    def maxwellian_check(self, ctx: SuiteContext) -> CheckResult:
        def run() -> CheckResult:
            options = ctx.config.transport
            problem = maxwellian_check(ctx.domain)
            sampler = FieldSampler(problem, mode="diffuse", depth=options.depth,
                                   samples=ctx.config.budgets.transport_paths, seed=ctx.seed)
            x, v = self._transport_points(ctx, "suite_maxwellian", ctx.config.budgets.transport_points)
            exact = sqrt_maxwellian(v)
            inside, exhausted = 0, 0
            for i in range(len(x)):
                est = solve_diffuse(sampler, options.t, PhasePoint(x[i], v[i]), name=f"maxwellian_{i}")
                inside += abs(est.value - exact[i]) <= 3.0 * est.std_error + est.truncation_bound + 1e-12
                exhausted += est.depth_exhausted
            fraction = inside / len(x)
            return CheckResult("transport.maxwellian", fraction, None, 0.99, fraction >= 0.99,
                               details={"n": len(x), "depth_exhausted_points": exhausted})

        return _timed("transport.maxwellian", run)

    def derivative_check(self, ctx: SuiteContext) -> CheckResult:
        def run() -> CheckResult:
            t = ctx.config.transport.t
            sampler = FieldSampler(free_streaming(ctx.domain), seed=ctx.seed)
            x, v = self._transport_points(ctx, "suite_transport_derivatives", 50)
            errors, skipped = [], 0
            for a, b in zip(x, v):
                p = PhasePoint(a, b)
                try:
                    gx, gv = derivative_field(sampler, t, p)
                except (GrazingRay, NearSingularTime):
                    skipped += 1
                    continue
                fx, fv = derivative_field_fd(sampler, t, p)
                exact, approx = np.concatenate([gx, gv]), np.concatenate([fx, fv])
                errors.append(np.linalg.norm(exact - approx) / max(np.linalg.norm(exact), 1e-8))
            errors = np.asarray(errors)
            fraction = float((errors < 1e-3).mean()) if len(errors) else 1.0
            return CheckResult("transport.derivatives", fraction, None, 0.99, fraction >= 0.99,
                               details={"n": int(len(errors)), "skipped": skipped,
                                        "max_rel_error": float(errors.max()) if len(errors) else 0.0})

        return _timed("transport.derivatives", run)

    def green_checks(self, ctx: SuiteContext) -> List[CheckResult]:
        results = []
        sampler = FieldSampler(green(ctx.domain), seed=ctx.seed)
        for p_exp in (1, 2):
            def run(p_exp=p_exp) -> CheckResult:
                summary = diagnostics.green_residual(sampler, p_exp, ctx.config.transport.t, seed=ctx.seed)
                return CheckResult(f"transport.green[p={p_exp}]", summary["residual"], None, 1e-2,
                                   summary["residual"] < 1e-2, details=summary)

            results.append(_timed(f"transport.green[p={p_exp}]", run))
        return results

    def trace_check(self, ctx: SuiteContext) -> CheckResult:
        def run() -> CheckResult:
            sampler = FieldSampler(pure_transport(ctx.domain), seed=ctx.seed)
            ladder = sorted(ctx.config.ladders.delta, reverse=True)
            rows = [diagnostics.trace_integrals(sampler, d, ctx.config.transport.t,
                                                n=ctx.config.budgets.measure, seed=ctx.seed, threads=ctx.threads)
                    for d in ladder]
            near = [r["near"] for r in rows]
            passed = all(b <= a for a, b in zip(near, near[1:])) and all(math.isfinite(r["far"]) for r in rows)
            return CheckResult("transport.trace_ladder", near, [r["near_std_error"] for r in rows], ladder, passed,
                               details={"rows": rows})

        return _timed("transport.trace_ladder", run)

    def bv_jump_check(self, ctx: SuiteContext) -> CheckResult:
        def run() -> CheckResult:
            domain = ctx.domain
            options = ctx.config.transport
            bump = domain.kind == "graph-bump"
            problem = jump_bump(domain) if bump else free_streaming(domain)
            sampler = FieldSampler(problem, seed=ctx.seed)
            lo, hi = domain.shape.bounding_box()
            levels = ctx.config.ladders.h
            targets = diagnostics.random_jump_targets(domain, 200, ctx.seed, TRANSPORT_SPEED)
            if bump:
                singular = diagnostics.singular_jump_targets(domain, self.singular_samples(ctx), options.t)
                if len(singular):
                    targets = singular
            tvs = []
            for points in (options.grid_points, options.grid_points + 2):
                grid = diagnostics.GridSpec(lo=[*lo, -2.0, -2.0, -2.0], hi=[*hi, 2.0, 2.0, 2.0], points=points)
                tvs.append(diagnostics.total_variation(sampler, options.t, grid, ctx.seed))
            profile = diagnostics.jump_profile(sampler, options.t, targets, levels, ctx.seed)
            means = [row["mean"] for row in profile]
            ratio = tvs[1] / tvs[0] if tvs[0] > 0 else 1.0
            tv_ok = 1.0 / 1.5 <= ratio <= 1.5
            if bump:
                jump_ok = means[-1] > 10.0 * diagnostics.JUMP_NOISE_FLOOR
            else:
                jump_ok = means[-1] <= means[0]
            return CheckResult("transport.bv_jump", means, None, levels, tv_ok and jump_ok,
                               details={"tv": tvs, "tv_ratio": ratio, "jump_profile": profile,
                                        "targets": len(targets), "datum": problem.name})

        return _timed("transport.bv_jump", run)

    def iteration_check(self, ctx: SuiteContext) -> CheckResult:
        def run() -> CheckResult:
            problem = dataclasses.replace(jump_bump(ctx.domain), boundary="diffuse", name="jump-bump-diffuse")
            cutoff = None
            if ctx.covers:
                cutoff = build_cutoff(ctx.covers[min(ctx.covers)])
            summary = diagnostics.iteration_trace_experiment(
                problem, 2, ctx.config.transport.t, ctx.config.ladders.delta,
                n=64, paths=8, seed=ctx.seed, cutoff=cutoff, budget_seconds=ctx.config.budget_seconds,
            )
            final = summary["iterates"][-1]["split"]
            return CheckResult("transport.iteration", [row["share"] for row in final], None, summary["deltas"],
                               summary["passed"], details=summary)

        return _timed("transport.iteration", run)

    def scenario_checks(self, ctx: SuiteContext, scenario: str) -> List[CheckResult]:
        """Verificações associadas a um cenário da galeria."""
        get_scenario(scenario)
        if scenario == "maxwellian-check":
            return [self.maxwellian_check(ctx)]
        if scenario == "jump-bump":
            return [self.bv_jump_check(ctx)]
        if scenario == "green":
            return self.green_checks(ctx)
        if scenario == "free-streaming":
            return [self.derivative_check(ctx)]
        return [self.pure_transport_check(ctx), self.trace_check(ctx)]

    def transport_checks(self, ctx: SuiteContext) -> List[CheckResult]:
        return [
            self.pure_transport_check(ctx),
            self.maxwellian_check(ctx),
            self.derivative_check(ctx),
            *self.green_checks(ctx),
            self.trace_check(ctx),
            self.bv_jump_check(ctx),
            self.iteration_check(ctx),
        ]
