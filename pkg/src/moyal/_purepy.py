"""Pure-numpy implementations of the two hot kernels.

These mirror the signatures of the compiled `_fastcore` extension; `_backend`
picks one of the two at import time.  Displacement matrices come from the
closed-form matrix elements

    <n+k|T(g)|n> = sqrt(n!/(n+k)!) g^k e^{-|g|^2/2} L_n^{(k)}(|g|^2)

evaluated with the three-term Laguerre recurrence and log-domain factorial
ratios, never by exponentiating a truncated generator.
"""

from __future__ import annotations

from functools import lru_cache
from math import lgamma

import numpy as np


@lru_cache(maxsize=32)
def _lgamma_table(dim: int) -> np.ndarray:
    return np.array([lgamma(n + 1) for n in range(dim + 1)])


def displacement_matrix(gamma: complex, dim: int) -> np.ndarray:
    """Single displacement matrix, vectorized over the diagonal offset."""
    gamma = complex(gamma)
    out = np.zeros((dim, dim), dtype=np.complex128)
    mod = abs(gamma)
    if mod < 1e-300:
        np.fill_diagonal(out, 1.0)
        return out
    x = mod * mod
    loggam = np.log(mod)
    unit = gamma / mod
    lg = _lgamma_table(dim)
    ks = np.arange(dim)
    # unit-modulus phase factors for the lower (g^k) and upper ((-g*)^k) wedges
    lower_ph = unit**ks
    upper_ph = (-np.conj(unit)) ** ks
    # pref[k] at n = 0: sqrt(0!/k!) |g|^k e^{-x/2}
    pref = np.exp(ks * loggam - 0.5 * lg[ks] - x / 2)
    l_prev = np.zeros(dim)
    l_cur = np.ones(dim)
    for n in range(dim):
        m = dim - n  # number of valid offsets at this level
        if n == 1:
            l_prev, l_cur = l_cur, (1.0 + ks[:m] - x) * l_cur[:m]
        elif n > 1:
            l_new = ((2 * n - 1 + ks[:m] - x) * l_cur[:m] - (n - 1 + ks[:m]) * l_prev[:m]) / n
            l_prev, l_cur = l_cur[:m], l_new
        if n > 0:
            pref = pref[:m] * np.sqrt(n / (n + ks[:m]))
        vals = pref[:m] * l_cur[:m]
        out[n:, n] = vals * lower_ph[:m]
        out[n, n + 1:] = (vals * upper_ph[:m])[1:]
    return out


def displacement_batch(gammas: np.ndarray, dim: int) -> np.ndarray:
    """Displacement matrices for a batch of amplitudes, shape (len, dim, dim).

    Vectorized over the batch; callers chunk to bound memory
    (len * dim^2 * 16 bytes).
    """
    gammas = np.asarray(gammas, dtype=np.complex128)
    npts = gammas.shape[0]
    out = np.zeros((npts, dim, dim), dtype=np.complex128)
    mod = np.abs(gammas)
    zero = mod < 1e-300
    safe_mod = np.where(zero, 1.0, mod)
    x = mod * mod
    loggam = np.log(safe_mod)
    unit = np.where(zero, 1.0, gammas / safe_mod)
    lg = _lgamma_table(dim)
    lower_ph = np.ones(npts, dtype=np.complex128)
    upper_ph = np.ones(npts, dtype=np.complex128)
    neg_conj = -np.conj(unit)
    for k in range(dim):
        if k > 0:
            lower_ph = lower_ph * unit
            upper_ph = upper_ph * neg_conj
        pref = np.exp(k * loggam - 0.5 * lg[k] - x / 2)
        l_prev = np.zeros(npts)
        l_cur = np.ones(npts)
        for n in range(dim - k):
            if n == 1:
                l_prev, l_cur = l_cur, (1.0 + k - x) * l_cur
            elif n > 1:
                l_new = ((2 * n - 1 + k - x) * l_cur - (n - 1 + k) * l_prev) / n
                l_prev, l_cur = l_cur, l_new
            if n > 0:
                pref = pref * np.sqrt(n / (n + k))
            vals = pref * l_cur
            out[:, n + k, n] = vals * lower_ph
            if k > 0:
                out[:, n, n + k] = vals * upper_ph
    if zero.any():
        idx = np.nonzero(zero)[0]
        out[idx] = 0.0
        out[idx, np.arange(dim)[None, :], np.arange(dim)[None, :]] = 1.0
    return out


def star_phase_quadrature(
    faw: np.ndarray,
    q1: np.ndarray,
    p1: np.ndarray,
    fbw: np.ndarray,
    q2: np.ndarray,
    p2: np.ndarray,
    out_q: np.ndarray,
    out_p: np.ndarray,
    block: int = 512,
) -> np.ndarray:
    """Direct double trapezoid sum of fa(x1) fb(x2) K_G(x1,x2;x).

    `faw`/`fbw` carry the quadrature weights.  The pure-phase kernel is
    pi^-2 exp(2i(q p1 - q1 p + q1 p2 - q2 p1 + q2 p - q p2)); the sum is
    grouped as U (M x N1), M (N1 x N2), V (N2 x M) and accumulated over
    N1-blocks in fixed order.
    """
    n1 = q1.shape[0]
    m = out_q.shape[0]
    s = np.zeros(m, dtype=np.complex128)
    # V[b, j] = fbw_b exp(2i(q2_b p_j - q_j p2_b))
    v = fbw[:, None] * np.exp(2j * (q2[:, None] * out_p[None, :] - out_q[None, :] * p2[:, None]))
    for lo in range(0, n1, block):
        hi = min(lo + block, n1)
        # U[j, a] = faw_a exp(2i(q_j p1_a - q1_a p_j))
        u = faw[None, lo:hi] * np.exp(
            2j * (out_q[:, None] * p1[None, lo:hi] - q1[None, lo:hi] * out_p[:, None])
        )
        mid = np.exp(
            2j * (q1[lo:hi, None] * p2[None, :] - q2[None, :] * p1[lo:hi, None])
        )
        t = mid @ v
        s += np.sum(u.T * t, axis=0)
    return s / np.pi**2
