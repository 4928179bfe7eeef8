"""Numeric inner loops.

Every kernel here exists in two flavours: the plain numpy function and a
``numba.njit`` compilation of it (see :mod:`admot._backend`).  The grid
oracle additionally has a vectorised numpy implementation, because the
loop form is hopeless without compilation.

All arrays are float64 and C-contiguous; callers are responsible for that.
"""

import types

import numpy as np

from ._backend import dual, numba_available

if numba_available():
    import numba as _nb

    _njit = _nb.njit(cache=True)
else:  # pragma: no cover
    def _njit(f):
        return f

# status codes returned by the ADMM kernel
CONVERGED = 0
MAX_ITER = 1

HIST_COLS = 4  # iteration, residual norm, primal l1, dual bound


def _ball_project_coef(a, s, b, tau, affine):
    """Project in right-singular coordinates onto ``||s*c - b|| <= tau``.

    Returns the projected coefficients and the Lagrange multiplier
    (``-1`` flags the affine limit ``tau == 0``).
    """
    r = s.shape[0]
    c = np.empty(r)
    if affine:
        for i in range(r):
            c[i] = b[i] / s[i]
        return c, -1.0
    f0 = 0.0
    for i in range(r):
        e = s[i] * a[i] - b[i]
        f0 += e * e
    if f0 <= tau * tau:
        for i in range(r):
            c[i] = a[i]
        return c, 0.0
    # Newton on 1/sqrt(f(lam)) - 1/tau; concave, so iterates climb monotonically
    lam = 0.0
    inv_tau = 1.0 / tau
    for _ in range(200):
        f = 0.0
        fp = 0.0
        for i in range(r):
            e = s[i] * a[i] - b[i]
            s2 = s[i] * s[i]
            den = 1.0 + lam * s2
            q = e * e / (den * den)
            f += q
            fp -= 2.0 * q * s2 / den
        sq = np.sqrt(f)
        phi = 1.0 / sq - inv_tau
        if phi >= -1e-13 * inv_tau:
            break
        dphi = -0.5 * fp / (f * sq)
        if dphi <= 0.0:
            break
        step = -phi / dphi
        lam += step
        if step <= 1e-15 * (1.0 + lam):
            break
    for i in range(r):
        c[i] = (a[i] + lam * s[i] * b[i]) / (1.0 + lam * s[i] * s[i])
    return c, lam


_ball_project_impls = dual(_ball_project_coef)


def admm_bpdn(U, s, Vt, y, sigma, tau, affine, w0, rho, max_iter,
              opt_tol, feas_tol, check_every, relax, hist):
    """ADMM for ``min ||x||_1  s.t. ||A x - y||_2 <= sigma``.

    ``A = U diag(s) Vt`` is a thin SVD with strictly positive ``s``.
    Splitting ``x = w``: x-steps are exact projections onto the
    constraint set (done in singular coordinates), w-steps are
    soft-thresholding.  Optimality is certified by a duality gap
    built from the projection multiplier.
    """
    m = U.shape[0]
    r = s.shape[0]
    n = Vt.shape[1]
    b = np.zeros(r)
    for k in range(r):
        acc = 0.0
        for i in range(m):
            acc += U[i, k] * y[i]
        b[k] = acc
    yperp = y - U @ b
    yperp2 = 0.0
    for i in range(m):
        yperp2 += yperp[i] * yperp[i]

    w = w0.copy()
    u = np.zeros(n)
    x = np.zeros(n)
    best_x = np.zeros(n)
    best_p = np.inf
    best_d = 0.0
    feas_lim = (sigma + feas_tol) * (sigma + feas_tol)
    nhist = 0
    status = MAX_ITER
    it = 0
    lam = 0.0
    a = np.zeros(r)
    c = np.zeros(r)
    while it < max_iter:
        it += 1
        v = w - u
        a = Vt @ v
        c, lam = _project(a, s, b, tau, affine)
        x = v + Vt.T @ (c - a)
        xh = relax * x + (1.0 - relax) * w
        z = xh + u
        thr = 1.0 / rho
        w_old = w
        w = np.sign(z) * np.maximum(np.abs(z) - thr, 0.0)
        u = u + xh - w

        if it % check_every == 0 or it == max_iter:
            # primal candidates: x is feasible by construction, w may be
            px = np.sum(np.abs(x))
            res_x2 = 0.0
            for k in range(r):
                e = s[k] * c[k] - b[k]
                res_x2 += e * e
            res_x2 += yperp2
            if px < best_p:
                best_p = px
                best_x[:] = x
            cw = Vt @ w
            res_w2 = yperp2
            for k in range(r):
                e = s[k] * cw[k] - b[k]
                res_w2 += e * e
            pw = np.sum(np.abs(w))
            if res_w2 <= feas_lim and pw <= best_p:
                best_p = pw
                best_x[:] = w

            # dual candidate nu = U mu + t*yperp, any direction is valid
            mu = np.zeros(r)
            tperp = 0.0
            if lam < 0.0:
                for k in range(r):
                    mu[k] = (b[k] - s[k] * a[k]) / (s[k] * s[k])
            else:
                for k in range(r):
                    mu[k] = b[k] - s[k] * c[k]
                tperp = 1.0
            g = Vt.T @ (s * mu)
            gmax = np.max(np.abs(g))
            if gmax > 0.0:
                nu_y = 0.0
                nu_n = 0.0
                for k in range(r):
                    nu_y += mu[k] * b[k]
                    nu_n += mu[k] * mu[k]
                nu_y += tperp * yperp2
                nu_n = np.sqrt(nu_n + tperp * tperp * yperp2)
                dv = (abs(nu_y) - sigma * nu_n) / gmax
                if dv > best_d:
                    best_d = dv

            if nhist < hist.shape[0]:
                hist[nhist, 0] = it
                hist[nhist, 1] = np.sqrt(res_x2)
                hist[nhist, 2] = px
                hist[nhist, 3] = best_d
                nhist += 1

            if best_p - best_d <= opt_tol * best_p:
                status = CONVERGED
                break

            # residual balancing
            rp = np.sqrt(np.sum((x - w) ** 2))
            rd = rho * np.sqrt(np.sum((w - w_old) ** 2))
            if rp > 10.0 * rd:
                rho *= 2.0
                u *= 0.5
            elif rd > 10.0 * rp:
                rho *= 0.5
                u *= 2.0
    return best_x, best_p, best_d, it, status, nhist


def _rebind(func, **names):
    """Copy of ``func`` whose module globals are overridden by ``names``.

    The copy keeps the original code object, so numba's on-disk cache
    (keyed by source location) works for it, unlike for closures.
    """
    g = dict(func.__globals__)
    g.update(names)
    f = types.FunctionType(func.__code__, g, func.__name__, func.__defaults__,
                           func.__closure__)
    f.__qualname__ = func.__qualname__
    f.__doc__ = func.__doc__
    return f


# the plain version calls the plain projection through the module global
_project = _ball_project_impls["numpy"]

ADMM_IMPLS = {"numpy": admm_bpdn}
if numba_available():
    ADMM_IMPLS["numba"] = _nb.njit(cache=True)(
        _rebind(admm_bpdn, _project=_ball_project_impls["numba"]))
else:  # pragma: no cover
    ADMM_IMPLS["numba"] = admm_bpdn


# --------------------------------------------------------------------------
# grid oracle: x = x0 + M t with t on a regular grid in [-extent, extent]^q


def _grid_scan_loop(A, y, sigma2, x0, M, extent, step, npts, check):
    q = M.shape[1]
    n = M.shape[0]
    m = A.shape[0]
    total = 1
    for _ in range(q):
        total *= npts
    best = np.inf
    best_idx = -1
    nfeas = 0
    x = np.empty(n)
    for flat in range(total):
        rem = flat
        for i in range(n):
            x[i] = x0[i]
        for j in range(q):
            tj = -extent + (rem % npts) * step
            rem //= npts
            for i in range(n):
                x[i] += M[i, j] * tj
        if check:
            r2 = 0.0
            for k in range(m):
                acc = -y[k]
                for i in range(n):
                    acc += A[k, i] * x[i]
                r2 += acc * acc
            if r2 > sigma2:
                continue
        nfeas += 1
        l1 = 0.0
        for i in range(n):
            l1 += abs(x[i])
        if l1 < best:
            best = l1
            best_idx = flat
    return best_idx, best, nfeas


def _grid_spread_loop(A, y, sigma2, x0, M, extent, step, npts, check,
                      center, level):
    """Largest inf-distance from ``center`` among feasible points with l1 <= level."""
    q = M.shape[1]
    n = M.shape[0]
    m = A.shape[0]
    total = 1
    for _ in range(q):
        total *= npts
    spread = 0.0
    x = np.empty(n)
    for flat in range(total):
        rem = flat
        for i in range(n):
            x[i] = x0[i]
        for j in range(q):
            tj = -extent + (rem % npts) * step
            rem //= npts
            for i in range(n):
                x[i] += M[i, j] * tj
        l1 = 0.0
        for i in range(n):
            l1 += abs(x[i])
        if l1 > level:
            continue
        if check:
            r2 = 0.0
            for k in range(m):
                acc = -y[k]
                for i in range(n):
                    acc += A[k, i] * x[i]
                r2 += acc * acc
            if r2 > sigma2:
                continue
        d = 0.0
        for i in range(n):
            d = max(d, abs(x[i] - center[i]))
        spread = max(spread, d)
    return spread


def _grid_points(flat, q, npts, extent, step):
    t = np.empty((flat.size, q))
    rem = flat.copy()
    for j in range(q):
        t[:, j] = -extent + (rem % npts) * step
        rem //= npts
    return t


def _grid_scan_numpy(A, y, sigma2, x0, M, extent, step, npts, check,
                     chunk=1 << 18):
    q = M.shape[1]
    total = npts ** q
    best, best_idx, nfeas = np.inf, -1, 0
    for start in range(0, total, chunk):
        flat = np.arange(start, min(total, start + chunk), dtype=np.int64)
        X = x0 + _grid_points(flat, q, npts, extent, step) @ M.T
        l1 = np.abs(X).sum(axis=1)
        if check:
            r2 = ((X @ A.T - y) ** 2).sum(axis=1)
            l1 = np.where(r2 <= sigma2, l1, np.inf)
        ok = np.isfinite(l1)
        nfeas += int(ok.sum())
        if ok.any():
            j = int(np.argmin(l1))
            if l1[j] < best:
                best, best_idx = float(l1[j]), int(flat[j])
    return best_idx, best, nfeas


def _grid_spread_numpy(A, y, sigma2, x0, M, extent, step, npts, check,
                       center, level, chunk=1 << 18):
    q = M.shape[1]
    total = npts ** q
    spread = 0.0
    for start in range(0, total, chunk):
        flat = np.arange(start, min(total, start + chunk), dtype=np.int64)
        X = x0 + _grid_points(flat, q, npts, extent, step) @ M.T
        keep = np.abs(X).sum(axis=1) <= level
        if check:
            keep &= ((X @ A.T - y) ** 2).sum(axis=1) <= sigma2
        if keep.any():
            spread = max(spread, float(np.abs(X[keep] - center).max()))
    return spread


GRID_SCAN_IMPLS = {"numpy": _grid_scan_numpy, "numba": _njit(_grid_scan_loop)}
GRID_SPREAD_IMPLS = {"numpy": _grid_spread_numpy, "numba": _njit(_grid_spread_loop)}
