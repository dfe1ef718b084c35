"""Zeeman quantum geometry of two-band Dirac Hamiltonians.

Fourfold normal/anomalous decomposition of the Zeeman quantum geometric
tensor, local nodal invariants (Gauss-type flux index, winding number,
Berry flux) and the gyrotropic / kinetic magnetoelectric responses.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    ContourError,
    ConvergenceError,
    FitError,
    GridError,
    ModelEvaluationError,
    NodeProximityError,
    PlanarityError,
    UndersampledContourError,
    UnknownGroupError,
    ZeemanQGTError,
)
from .model import (  # noqa: F401
    NODE_GUARD,
    BandPairElements,
    Custom,
    DVectorModel,
    EigenSystem,
    KPoint,
    MassiveDirac,
    PlanarWinding,
    band_pair_elements,
    constant_model,
    eigensystem,
    evaluate_d,
    linear_dirac,
    model_from_dict,
)
from .geometry import (  # noqa: F401
    ConventionalQGT,
    SectorDecomposition,
    ZeemanQGT,
    closed_form_sectors,
    conventional_qgt,
    decompose,
    zeeman_qgt,
)
from .fields import (  # noqa: F401
    Contour,
    Grid2D,
    SampledField,
    TopologicalCharges,
    contour_flux,
    curl_z,
    divergence,
    dual_check,
    hodge_star,
    sample_field,
    topological_charges,
)
from .response import (  # noqa: F401
    IntegrationDomain,
    OccupationSpec,
    Prefactors,
    ResponseSpectrum,
    ScalingFit,
    alpha_tensor,
    decompose_pm,
    response_spectrum,
    scaling_fit,
    sigma_tensor,
    weighted_sector_integrals,
)
from .symmetry import allowed_sectors, groups_allowing  # noqa: F401
