"""Strong-converse and error exponents of discrete memoryless channels.

Two independent computational routes to the same curves:

- ``gallager``: parametric tilted-divergence form, optimized over a scalar
  tilt parameter and the input distribution.
- ``klform``: divergence-minimization form over auxiliary channels, with
  mutual-information constraints.

``verifier`` checks their agreement (and structural properties) over channel
corpora; ``oracle`` provides slow brute-force references for certification.
"""

from .channel import (
    Channel,
    Distribution,
    ValidationError,
    channel_digest,
    conditional_divergence,
    make_channel,
    mutual_information,
)
from .families import (
    bec,
    bsc,
    identity_channel,
    parse_channel_spec,
    random_channel,
    useless_channel,
    z_channel,
)
from .gallager import (
    e_delta,
    error_exponent,
    f_delta,
    g_delta,
    gallager_j,
    strong_converse_exponent,
)
from .klform import (
    ExponentCurve,
    VSolverConfig,
    capacity,
    dk_exponent,
    dk_pointwise,
    emit_curve,
    k_delta,
    sphere_packing_err,
    sphere_packing_sc,
    tilde_e_delta,
    tilde_f_delta,
    tilde_g_delta,
    zero_rate_threshold,
)
from .verifier import CheckResult, VerificationReport, run_corpus

__version__ = "1.0.0"

__all__ = [
    "Channel",
    "CheckResult",
    "Distribution",
    "ExponentCurve",
    "VSolverConfig",
    "ValidationError",
    "VerificationReport",
    "bec",
    "bsc",
    "capacity",
    "channel_digest",
    "conditional_divergence",
    "dk_exponent",
    "dk_pointwise",
    "e_delta",
    "emit_curve",
    "error_exponent",
    "f_delta",
    "g_delta",
    "gallager_j",
    "identity_channel",
    "k_delta",
    "make_channel",
    "mutual_information",
    "parse_channel_spec",
    "random_channel",
    "run_corpus",
    "sphere_packing_err",
    "sphere_packing_sc",
    "strong_converse_exponent",
    "tilde_e_delta",
    "tilde_f_delta",
    "tilde_g_delta",
    "useless_channel",
    "z_channel",
    "zero_rate_threshold",
]
