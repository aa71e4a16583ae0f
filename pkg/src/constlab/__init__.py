"""Desk-scale laboratory for box norms, pseudo-random measures, and prime
constellation counting on Z_N^d."""

__version__ = "0.1.0"

from .errors import (ConstlabError, InternalInconsistencyError,
                     InvalidInputError, NumericalFailureError,
                     PreconditionError)
from .gridfn import GridFunction, expectation, pointwise, tensor, translate
from .lattice import (Basis, derived_basis, is_general_position,
                      lift_to_general_position, primitive_part,
                      segment_geometry)
from .boxnorm import (BoxNormPlan, MCEstimate, box_inner, box_norm,
                      change_of_basis, inverse_change_of_basis)
from .dual import dual_function, pairing, qap_probe
from .sieve import (MeasureParams, SieveCache, green_tao_nu, lambda_R,
                    lambda_bar, majorization_check, make_measure_params)
from .conditions import (CorrelationSpec, LinearFormFamily, ThetaSystem,
                         euler_factor_identity_check, omega_X, tau_weight,
                         verify_correlation, verify_linear_forms,
                         verify_local_factor_cases)
from .counting import (Constellation, count_average, find_constellations,
                       run_pipeline, unwrap, von_neumann_probe)

__all__ = [
    "__version__",
    "ConstlabError", "InvalidInputError", "PreconditionError",
    "NumericalFailureError", "InternalInconsistencyError",
    "GridFunction", "expectation", "pointwise", "tensor", "translate",
    "Basis", "derived_basis", "is_general_position",
    "lift_to_general_position", "primitive_part", "segment_geometry",
    "BoxNormPlan", "MCEstimate", "box_inner", "box_norm",
    "change_of_basis", "inverse_change_of_basis",
    "dual_function", "pairing", "qap_probe",
    "MeasureParams", "SieveCache", "green_tao_nu", "lambda_R", "lambda_bar",
    "majorization_check", "make_measure_params",
    "CorrelationSpec", "LinearFormFamily", "ThetaSystem",
    "euler_factor_identity_check", "omega_X", "tau_weight",
    "verify_correlation", "verify_linear_forms", "verify_local_factor_cases",
    "Constellation", "count_average", "find_constellations", "run_pipeline",
    "unwrap", "von_neumann_probe",
]
