"""Large deviations, long strange segments and ruin for moving averages.

The package works with X_n = sum_i phi_i Z_{n-i} driven by i.i.d. centred
innovations, with absolutely summable (short memory) or regularly varying
(long memory) coefficients. It computes rate-function bounds and ruin
asymptotes, simulates truncated paths, measures long strange segments and
estimates ruin probabilities by plain or tilted Monte Carlo.
"""

from .errors import CertificationError, ConfigurationError, MemratesError
from .model import (
    BalancedPower,
    FiniteLag,
    Gaussian,
    RegimeSpec,
    TargetSet,
    make_coefficients,
    make_innovations,
)

__version__ = "0.1.0"

__all__ = [
    "BalancedPower",
    "CertificationError",
    "ConfigurationError",
    "FiniteLag",
    "Gaussian",
    "MemratesError",
    "RegimeSpec",
    "TargetSet",
    "make_coefficients",
    "make_innovations",
    "__version__",
]
