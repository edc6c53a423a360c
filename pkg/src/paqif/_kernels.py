"""Low-level interlocking-factorization kernels.

All kernels work on plain float64 ndarrays with a leading batch axis so a
sweep of independent line systems compiles to one tight loop.  Working
residuals live in a band + anti-band ("cross") layout:

  band[b, d, i]  = A(i, i + d - beta)            for d in [0, 2*beta]
  anti[b, c, i]  = A(i, (n-1-i) + c - beta)      for c in [0, 2*beta]

Entries addressable both ways (near the matrix centre) are stored in the
band slot only.  Every entry the factorization touches provably lies in
one of the two slots, which the reconstruction tests verify.

Numba is used when importable (it always is in the supported install);
the pure-Python fallback is identical but slow.
"""

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


_TINY = 1e-300


@njit(cache=True, nogil=True, inline="always")
def _cget(band, anti, beta, n, i, j):
    d = j - i
    if -beta <= d <= beta:
        return band[d + beta, i]
    c = i + j - (n - 1)
    if -beta <= c <= beta:
        return anti[c + beta, i]
    return 0.0


@njit(cache=True, nogil=True, inline="always")
def _cadd(band, anti, beta, n, i, j, val):
    d = j - i
    if -beta <= d <= beta:
        band[d + beta, i] += val
        return
    c = i + j - (n - 1)
    if -beta <= c <= beta:
        anti[c + beta, i] += val


@njit(cache=True, nogil=True)
def factor_batch(band, anti, z2x2, zl, zr, ww, tol, status):
    """Alternate-quadrant factorization of a batch of banded matrices.

    Parameters are batch-leading arrays:
      band  (B, 2*beta+1, n)   working residual, consumed in place
      anti  (B, 2*beta+1, n)   anti-band fill storage, zero on entry
      z2x2  (B, s+1, 2, 2)     level corner entries of Z
      zl    (B, s+1, 2, beta+1) Z rows, left window cols [rt-beta, rt]
      zr    (B, s+1, 2, beta+1) Z rows, right window cols [rb, rb+beta]
      ww    (B, s+1, 2*beta, 2) W wing entries (top rows then bottom rows)
      status(B,)               0 on success, level index on breakdown

    Level k (1-based) eliminates rows/columns rt = s-k, rb = s+k-1
    (0-based).  Z rows are copied from the running residual, W columns
    solve the level 2x2 systems, and the residual takes a rank-2 update.
    """
    nb = band.shape[0]
    n = band.shape[2]
    beta = (band.shape[1] - 1) // 2
    s = n // 2
    for b in range(nb):
        status[b] = 0
        for k in range(1, s + 1):
            rt = s - k
            rb = s + k - 1
            # Z rows rt and rb restricted to their structural windows.
            for t in range(beta + 1):
                jl = rt - beta + t
                if jl >= 0:
                    zl[b, k, 0, t] = _cget(band[b], anti[b], beta, n, rt, jl)
                    zl[b, k, 1, t] = _cget(band[b], anti[b], beta, n, rb, jl)
                jr = rb + t
                if jr < n:
                    zr[b, k, 0, t] = _cget(band[b], anti[b], beta, n, rt, jr)
                    zr[b, k, 1, t] = _cget(band[b], anti[b], beta, n, rb, jr)
            a11 = zl[b, k, 0, beta]  # z(rt, rt)
            a12 = zr[b, k, 0, 0]     # z(rt, rb)
            a21 = zl[b, k, 1, beta]  # z(rb, rt)
            a22 = zr[b, k, 1, 0]     # z(rb, rb)
            z2x2[b, k, 0, 0] = a11
            z2x2[b, k, 0, 1] = a12
            z2x2[b, k, 1, 0] = a21
            z2x2[b, k, 1, 1] = a22
            top_lo = rt - beta if rt - beta > 0 else 0
            bot_hi = rb + beta if rb + beta < n - 1 else n - 1
            have_wings = (top_lo <= rt - 1) or (rb + 1 <= bot_hi)
            if not have_wings:
                continue
            # W columns rt, rb: solve the transposed-corner 2x2 per wing row.
            det = a11 * a22 - a21 * a12
            scale = abs(a11)
            if abs(a12) > scale:
                scale = abs(a12)
            if abs(a21) > scale:
                scale = abs(a21)
            if abs(a22) > scale:
                scale = abs(a22)
            if abs(det) <= tol * (scale * scale) + _TINY:
                status[b] = k
                break
            for t in range(2 * beta):
                if t < beta:
                    i = rt - beta + t
                    if i < 0:
                        continue
                else:
                    i = rb + 1 + (t - beta)
                    if i >= n:
                        continue
                b1 = _cget(band[b], anti[b], beta, n, i, rt)
                b2 = _cget(band[b], anti[b], beta, n, i, rb)
                w1 = (a22 * b1 - a21 * b2) / det
                w2 = (a11 * b2 - a12 * b1) / det
                ww[b, k, t, 0] = w1
                ww[b, k, t, 1] = w2
                if w1 == 0.0 and w2 == 0.0:
                    continue
                # Rank-2 residual update restricted to the Z windows.
                for u in range(beta + 1):
                    jl = rt - beta + u
                    if jl >= 0:
                        _cadd(band[b], anti[b], beta, n, i, jl,
                              -(w1 * zl[b, k, 0, u] + w2 * zl[b, k, 1, u]))
                    jr = rb + u
                    if jr < n:
                        _cadd(band[b], anti[b], beta, n, i, jr,
                              -(w1 * zr[b, k, 0, u] + w2 * zr[b, k, 1, u]))


@njit(cache=True, nogil=True)
def solve_w_batch(ww, rhs):
    """Middle-out solve of W y = rhs, in place (rhs becomes y)."""
    nb = rhs.shape[0]
    n = rhs.shape[1]
    beta = ww.shape[2] // 2
    s = n // 2
    for b in range(nb):
        for k in range(1, s + 1):
            rt = s - k
            rb = s + k - 1
            yt = rhs[b, rt]
            yb = rhs[b, rb]
            for t in range(beta):
                i = rt - beta + t
                if i >= 0:
                    rhs[b, i] -= yt * ww[b, k, t, 0] + yb * ww[b, k, t, 1]
                i2 = rb + 1 + t
                if i2 < n:
                    rhs[b, i2] -= yt * ww[b, k, beta + t, 0] \
                        + yb * ww[b, k, beta + t, 1]


@njit(cache=True, nogil=True)
def solve_z_batch(z2x2, zl, zr, y, x, start, tol, status, trace):
    """Outside-in solve of Z x = y.

    ``start`` is the first 1-based unknown pair level; pairs below it must
    be prefilled in ``x`` (used for the decoupled middle solve, where the
    first/last beta unknowns are known block-boundary values).  ``trace``
    (B, 2*s) records the resolution order of the unknowns, -1 padded.
    """
    nb = y.shape[0]
    n = y.shape[1]
    beta = zl.shape[3] - 1
    s = n // 2
    for b in range(nb):
        status[b] = 0
        pos = 0
        for level in range(start, s + 1):
            p = level - 1
            q = n - 1 - p
            k = s - p
            rt_rhs = y[b, p]
            rb_rhs = y[b, q]
            for t in range(beta):
                j = p - beta + t
                if j >= 0:
                    rt_rhs -= zl[b, k, 0, t] * x[b, j]
                    rb_rhs -= zl[b, k, 1, t] * x[b, j]
                j2 = q + 1 + t
                if j2 < n:
                    rt_rhs -= zr[b, k, 0, 1 + t] * x[b, j2]
                    rb_rhs -= zr[b, k, 1, 1 + t] * x[b, j2]
            a11 = z2x2[b, k, 0, 0]
            a12 = z2x2[b, k, 0, 1]
            a21 = z2x2[b, k, 1, 0]
            a22 = z2x2[b, k, 1, 1]
            det = a11 * a22 - a12 * a21
            scale = abs(a11)
            if abs(a12) > scale:
                scale = abs(a12)
            if abs(a21) > scale:
                scale = abs(a21)
            if abs(a22) > scale:
                scale = abs(a22)
            if abs(det) <= tol * (scale * scale) + _TINY:
                status[b] = level
                break
            x[b, p] = (a22 * rt_rhs - a12 * rb_rhs) / det
            x[b, q] = (a11 * rb_rhs - a21 * rt_rhs) / det
            trace[b, pos] = p
            trace[b, pos + 1] = q
            pos += 2


@njit(cache=True, nogil=True)
def band_matvec_batch(bands, x, out):
    """out = A x for batched diagonal-major banded matrices."""
    nb = bands.shape[0]
    n = bands.shape[2]
    beta = (bands.shape[1] - 1) // 2
    for b in range(nb):
        for i in range(n):
            acc = 0.0
            lo = i - beta if i - beta > 0 else 0
            hi = i + beta + 1 if i + beta + 1 < n else n
            for j in range(lo, hi):
                acc += bands[b, j - i + beta, i] * x[b, j]
            out[b, i] = acc


@njit(cache=True, nogil=True)
def psor_sweeps(bands, f, u, omega, tol, max_sweeps):
    """Projected SOR on a banded LCP; returns (sweeps, last change).

    Componentwise Gauss-Seidel in natural order with clamp to zero,
    terminating when the successive-change infinity norm drops below
    ``tol``.
    """
    n = f.shape[0]
    beta = (bands.shape[0] - 1) // 2
    sweeps = 0
    change = 0.0
    for sweep in range(max_sweeps):
        change = 0.0
        for i in range(n):
            acc = 0.0
            lo = i - beta if i - beta > 0 else 0
            hi = i + beta + 1 if i + beta + 1 < n else n
            for j in range(lo, hi):
                if j != i:
                    acc += bands[j - i + beta, i] * u[j]
            diag = bands[beta, i]
            unew = (1.0 - omega) * u[i] + omega * (f[i] - acc) / diag
            if unew < 0.0:
                unew = 0.0
            d = abs(unew - u[i])
            if d > change:
                change = d
            u[i] = unew
        sweeps = sweep + 1
        if change <= tol:
            break
    return sweeps, change
