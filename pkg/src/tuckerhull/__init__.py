"""Shared low-rank subspaces and convex-hull models for families of operators."""
from .errors import (DimensionMismatchError, FormatError, InconsistentDimensionError,
                     InvalidParameterError, MalformedHeaderError, RankDeficiencyError,
                     SizeCapError, TruncatedPayloadError, TuckerHullError)
from .factored import (DENSE_SIZE_CAP, FactoredOperator, apply, densify, frobenius_norm,
                       inner)
from .hull import (HullDistance, HullModel, HullProjection, SimplexWeights, build_hull,
                   hull_from_coeffs, hull_membership_distance, project_onto_hull)
from .simgen import FamilyParams, generate_family
from .simplex import project_simplex
from .subspace import (CoeffMatrix, OrthoBasis, SubspaceModel, als_fit, dct_basis,
                       fit_value, full_svd_baseline, hosvd_init, project_coeffs,
                       reconstruct, relative_error,
                       residual_norm_sq, truncation_error_one_sided)

__version__ = "0.1.0"
