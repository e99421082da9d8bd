"""Compensated (twice working precision) sums of products.

Gram matrices built from smooth kernels are routinely singular to working
precision, and a plain float64 residual ``B - G @ X`` is then dominated by
rounding.  The routines here follow the Dot2 scheme of Ogita, Rump and
Oishi: products are split exactly with Dekker's algorithm and accumulated
with TwoSum, so the result is as accurate as if computed in double-double
and rounded once.
"""

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_sum(a, b):
    s = a + b
    z = s - a
    return s, (a - (s - z)) + (b - z)


def _accumulate(terms, init):
    s = np.array(init, dtype=float, copy=True)
    comp = np.zeros_like(s)
    for (ah, al), (bh, bl) in terms:
        p = (ah + al) * (bh + bl)
        # exact error of the rounded product
        ep = al * bl - (((p - ah * bh) - al * bh) - ah * bl)
        s, es = _two_sum(s, p)
        comp += ep + es
    return s + comp


def dot2(A, B, C=None, shift=0.0):
    """Return ``C + (A + shift * I) @ B`` for real 2-D arrays, accurate to ~1 ulp.

    The diagonal shift enters as an exact extra term, so ``A + shift * I``
    is never rounded.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    shape = (A.shape[0], B.shape[1])
    init = np.zeros(shape) if C is None else np.broadcast_to(np.asarray(C, dtype=float), shape)
    Ah, Al = _split(A)
    Bh, Bl = _split(B)
    terms = [((Ah[:, k, None], Al[:, k, None]), (Bh[None, k, :], Bl[None, k, :]))
             for k in range(A.shape[1])]
    if shift:
        if A.shape[0] != A.shape[1]:
            raise ValueError("a diagonal shift needs a square matrix")
        terms.append((_split(np.float64(shift)), (Bh, Bl)))
    return _accumulate(terms, init)


def colwise_dot2(X, Y):
    """Return ``sum(X * Y, axis=0)`` for real 2-D arrays, accurately."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Xh, Xl = _split(X)
    Yh, Yl = _split(Y)
    terms = (((Xh[a], Xl[a]), (Yh[a], Yl[a])) for a in range(X.shape[0]))
    return _accumulate(terms, np.zeros(X.shape[1]))


def sym_matvecs(G, U, shift=0.0):
    """``(G + shift * I) @ U`` for real ``G`` and real or complex ``U``."""
    if np.iscomplexobj(U):
        return dot2(G, U.real, shift=shift) + 1j * dot2(G, U.imag, shift=shift)
    return dot2(G, U, shift=shift)


def hermitian_forms(G, U, shift=0.0):
    """Real parts of ``u_i^H (G + shift * I) u_i`` for each column of ``U`` (``G`` symmetric)."""
    U = np.asarray(U)
    if np.iscomplexobj(U):
        Ur, Ui = U.real, U.imag
        return colwise_dot2(np.vstack([Ur, Ui]),
                            np.vstack([dot2(G, Ur, shift=shift), dot2(G, Ui, shift=shift)]))
    return colwise_dot2(U, dot2(G, U, shift=shift))
