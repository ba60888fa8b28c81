# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernel: dense truncated product of jet coefficient cubes.

The truncated Cauchy product is the inner loop of every series operation
(composition, Newton inversion, the whole normal-form pipeline), so it is
the one routine worth compiling.  See ``_kernel_py`` for the fallback with
the identical contract.
"""

BACKEND_NAME = "compiled"


def mul_trunc(double[:, :, ::1] a, double[:, :, ::1] b, double[:, :, ::1] out, int order):
    """out += truncated Cauchy product of a and b (all 3-d, same shape)."""
    cdef int n0 = a.shape[0], n1 = a.shape[1], n2 = a.shape[2]
    cdef int i1, j1, k1, i2, j2, k2, r0, r1, r2
    cdef double c
    for i1 in range(min(n0, order + 1)):
        for j1 in range(min(n1, order + 1 - i1)):
            for k1 in range(min(n2, order + 1 - i1 - j1)):
                c = a[i1, j1, k1]
                if c == 0.0:
                    continue
                r0 = order + 1 - i1 - j1 - k1
                for i2 in range(min(n0 - i1, r0)):
                    r1 = r0 - i2
                    for j2 in range(min(n1 - j1, r1)):
                        r2 = r1 - j2
                        for k2 in range(min(n2 - k1, r2)):
                            out[i1 + i2, j1 + j2, k1 + k2] += c * b[i2, j2, k2]
    return out
