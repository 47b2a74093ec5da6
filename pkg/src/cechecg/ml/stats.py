import numpy as np
from scipy import stats

from ..errors import DegenerateTestError, ValidationError


def paired_t_test(a, b):
    """Two-sided paired t-test; returns {"t": ..., "p": ...} with n-1 degrees of freedom."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ValidationError("paired t-test needs two equal-length samples of size >= 2")
    diff = a - b
    sd = diff.std(ddof=1)
    if sd == 0:
        raise DegenerateTestError("paired differences have zero variance")
    n = len(diff)
    t = diff.mean() / (sd / np.sqrt(n))
    p = 2.0 * stats.t.sf(abs(t), df=n - 1)
    return {"t": float(t), "p": float(p)}
