"""Generalized eigenspace decomposition (GESD) for third-order CPD."""
from .bounds import corollary_bound, delta_j, eps1, eps2_lower, pencil_bound
from .gesd import GesdConfig, GesdError, GesdResult, gesd
from .gevd import gevd, gevd_full
from .metrics import cpderr, principal_angles, snr_db
from .mlsvd import Mlsvd, expand, mlsvd_truncated
from .synth import FactorSpec, gen_problem
from .tensor_core import Cpd, from_cpd, khatri_rao, mode_product, unfold

__all__ = [
    "Cpd", "FactorSpec", "GesdConfig", "GesdError", "GesdResult", "Mlsvd",
    "corollary_bound", "cpderr", "delta_j", "eps1", "eps2_lower", "expand",
    "from_cpd", "gen_problem", "gesd", "gevd", "gevd_full", "khatri_rao",
    "mlsvd_truncated", "mode_product", "pencil_bound", "principal_angles",
    "snr_db", "unfold",
]
