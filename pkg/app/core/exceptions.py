"""
Exceções customizadas da aplicação.
"""


class AppError(Exception):
    """Exceção base da aplicação."""
    exit_code: int = 1


# Geometria

class GeometryError(AppError):
    """Erro em consultas geométricas do domínio."""
    pass


class NotOnBoundary(GeometryError):
    """Ponto fora da tolerância de proximidade da fronteira."""
    pass


class ChartMiss(GeometryError):
    """Nenhuma carta cobre o ponto de fronteira."""
    pass


class NotTangent(GeometryError):
    """Direção não tangente à fronteira."""
    pass


class DegenerateBoundary(GeometryError):
    """Condição de inclinação impossível acima de delta_min."""
    pass


class OutOfPatch(GeometryError):
    """Parâmetros fora do retângulo da carta."""
    pass


# Traçado de raios

class RaytraceError(AppError):
    """Erro no traçado de raios."""
    pass


class NumericalMiss(RaytraceError):
    """Marcha não encontrou a fronteira dentro do limite de passos."""
    pass


class GrazingRay(RaytraceError):
    """Raio rasante onde uma fórmula exige não-degenerescência."""
    pass


class RayLeavesChart(RaytraceError):
    """Raio tangencial sai do domínio antes do parâmetro pedido."""
    pass


# Amostragem

class SamplingError(AppError):
    """Erro de amostragem."""
    pass


class NoGrazingDirections(SamplingError):
    """O domínio não admite direções rasantes na resolução pedida."""
    pass


class EmptySampleSet(SamplingError):
    """Conjunto de amostras vazio."""
    pass


# Recobrimento

class CoverError(AppError):
    """Erro na construção do recobrimento."""
    pass


class EpsTooLarge(CoverError):
    """Espaçamento da rede maior que a escala das cartas."""
    pass


# Transporte

class TransportError(AppError):
    """Erro no resolvedor de transporte."""
    pass


class QuadratureFailure(TransportError):
    """Quadratura adaptativa não atingiu a tolerância."""
    pass


class NearSingularTime(TransportError):
    """Tempo muito próximo de t = t_b."""
    pass


class GridTooCoarse(TransportError):
    """Grade mais grossa que a escala das feições."""
    pass


class BudgetExceeded(TransportError):
    """Experimento excedeu o orçamento de tempo."""
    pass


# Persistência e execução

class RepositoryError(AppError):
    """Erro no repositório/banco de dados."""
    pass


class ConfigInvalid(AppError):
    """Configuração de experimento inválida."""
    exit_code = 64


class CheckFailed(AppError):
    """Ao menos uma verificação falhou."""
    exit_code = 2


class RuntimeBudgetExceeded(AppError):
    """Suíte excedeu o orçamento de tempo."""
    exit_code = 3
