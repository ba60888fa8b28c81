"""Pure-numpy fallback for the hot kernel.

Same contract as the compiled extension ``crosscap._kernel``: dense
truncated product of coefficient cubes.  Arrays are 3-d float64 with dummy
trailing axes for jets in fewer than three variables.  Entries whose total
degree exceeds ``order`` are ignored on input and left zero on output.
"""

import numpy as np

BACKEND_NAME = "python"


def mul_trunc(a, b, out, order):
    """out += truncated Cauchy product of a and b (all 3-d, same shape)."""
    n0, n1, n2 = a.shape
    nz = np.argwhere(a != 0.0)
    for i, j, k in nz:
        d = i + j + k
        if d > order:
            continue
        coeff = a[i, j, k]
        out[i:, j:, k:] += coeff * b[: n0 - i, : n1 - j, : n2 - k]
    if out.shape[0] + out.shape[1] + out.shape[2] - 3 > order:
        _mask_inplace(out, order)
    return out


def _mask_inplace(out, order):
    n0, n1, n2 = out.shape
    deg = (
        np.arange(n0)[:, None, None]
        + np.arange(n1)[None, :, None]
        + np.arange(n2)[None, None, :]
    )
    out[deg > order] = 0.0
