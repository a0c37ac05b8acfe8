"""
Rotas de consulta geométrica dos domínios da galeria.
"""
import logging
from typing import Optional, get_args

from fastapi import APIRouter, Depends, HTTPException, Query, status

from app.application.dtos import DomainKind, ExperimentConfig, GeometryInfoResponse
from app.application.use_cases import GeometryInfoUseCase
from app.core.dependencies import get_geometry_info_use_case
from app.core.exceptions import ConfigInvalid, GeometryError

logger = logging.getLogger(__name__)
router = APIRouter(prefix="/domains", tags=["geometry"])


@router.get("/{kind}", response_model=GeometryInfoResponse, status_code=status.HTTP_200_OK)
def domain_info(
    kind: str,
    seed: int = Query(0, ge=0),
    chart_grid: Optional[int] = Query(None, ge=4),
    use_case: GeometryInfoUseCase = Depends(get_geometry_info_use_case),
) -> GeometryInfoResponse:
    """
    Resumo da decomposição em cartas de um domínio.

    Raises:
        HTTPException: 404 para domínio desconhecido, 422 se a decomposição falhar
    """
    if kind not in get_args(DomainKind):
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"Domínio desconhecido: {kind}")
    try:
        config = ExperimentConfig.parse({"domain": {"kind": kind, "chart_grid": chart_grid}, "seed": seed})
        return use_case.execute(config)
    except (ConfigInvalid, GeometryError) as e:
        logger.error(f"Falha no resumo de {kind}: {e}")
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
