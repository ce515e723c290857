from __future__ import annotations

import logging

from .intensity import INTENSITY_CLASSES, ClusterIntensity
from .models import ModelParams, NuConvention, Region

logger = logging.getLogger(__name__)


def create_intensity(
    params: ModelParams,
    region: Region,
    nu: NuConvention | str = NuConvention.PROBABILITY,
) -> ClusterIntensity:
    """
    Given parameters, a region and a reference-measure convention,
    create and return a ready-to-use intensity model.
    """
    try:
        convention = NuConvention(nu)
    except ValueError:
        raise ValueError(f"Unsupported nu convention: {nu}") from None

    model = INTENSITY_CLASSES[convention](params, region)
    logger.debug(f"Created {type(model).__name__} with nu(E)={model.nu_mass:g}")
    return model
