"""Hot numeric kernels, each in a numba flavour and a pure-numpy flavour.

Shared conventions:

* a polynomial map with ``m`` components over ``n`` variables is compiled to
  ``exps`` (T, n) int64 and ``coeffs`` (m, T) complex128;
* ``kind`` selects the map: 0 polynomial, 1 componentwise inverse z -> 1/z;
* ``dom`` selects the domain: 0 Euclidean ball (disk included), 1 polydisk,
  2 product of annuli r < |z_i| < 1/r.

The public names at the bottom dispatch on :data:`wcop._accel.USE_NUMBA`.
"""
import numpy as np

from . import _accel
from ._accel import njit

KIND_POLY = 0
KIND_INVERSE = 1

DOM_BALL = 0
DOM_POLYDISK = 1
DOM_ANNULUS = 2

# Newton step outcomes
NEWTON_OK = 0
NEWTON_MAXSTEPS = 1
NEWTON_LEFT_DOMAIN = 2


# ---------------------------------------------------------------- convolution

def conv_numpy(a, b, table):
    ia = np.flatnonzero(a)
    ib = np.flatnonzero(b)
    out = np.zeros(a.shape[0], dtype=np.complex128)
    if ia.size == 0 or ib.size == 0:
        return out
    idx = table[np.ix_(ia, ib)]
    vals = np.multiply.outer(a[ia], b[ib])
    keep = idx >= 0
    idx = idx[keep]
    vals = vals[keep]
    D = a.shape[0]
    out.real = np.bincount(idx, weights=vals.real, minlength=D)
    out.imag = np.bincount(idx, weights=vals.imag, minlength=D)
    return out


@njit
def conv_numba(a, b, table):
    D = a.shape[0]
    out = np.zeros(D, dtype=np.complex128)
    for i in range(D):
        ai = a[i]
        if ai == 0:
            continue
        for j in range(D):
            bj = b[j]
            if bj == 0:
                continue
            k = table[i, j]
            if k >= 0:
                out[k] += ai * bj
    return out


# ------------------------------------------------------------ map evaluation

def _monomials_numpy(points, exps):
    # (S, T)
    return np.prod(points[:, None, :] ** exps[None, :, :], axis=2)


def map_eval_numpy(points, kind, exps, coeffs):
    if kind == KIND_INVERSE:
        return 1.0 / points
    return _monomials_numpy(points, exps) @ coeffs.T


def jac_eval_numpy(points, kind, jexps, jcoeffs, n):
    S = points.shape[0]
    if kind == KIND_INVERSE:
        out = np.zeros((S, n, n), dtype=np.complex128)
        idx = np.arange(n)
        out[:, idx, idx] = -1.0 / points**2
        return out
    flat = _monomials_numpy(points, jexps) @ jcoeffs.T
    return flat.reshape(S, -1, n)


def inside_numpy(points, dom, r):
    mod = np.abs(points)
    if dom == DOM_BALL:
        return np.sum(mod**2, axis=1) < 1.0
    if dom == DOM_POLYDISK:
        return np.max(mod, axis=1) < 1.0
    return np.all((mod > r) & (mod < 1.0 / r), axis=1)


@njit
def _map_eval_one(z, kind, exps, coeffs, out):
    n = z.shape[0]
    if kind == KIND_INVERSE:
        for i in range(n):
            out[i] = 1.0 / z[i]
        return
    m = coeffs.shape[0]
    for i in range(m):
        out[i] = 0.0
    for t in range(exps.shape[0]):
        mono = 1.0 + 0.0j
        for k in range(n):
            e = exps[t, k]
            for _ in range(e):
                mono *= z[k]
        for i in range(m):
            c = coeffs[i, t]
            if c != 0:
                out[i] += c * mono


@njit
def _jac_eval_one(z, kind, jexps, jcoeffs, out):
    n = z.shape[0]
    if kind == KIND_INVERSE:
        for i in range(n):
            for k in range(n):
                out[i, k] = 0.0
            out[i, i] = -1.0 / (z[i] * z[i])
        return
    flat = np.empty(jcoeffs.shape[0], dtype=np.complex128)
    _map_eval_one(z, KIND_POLY, jexps, jcoeffs, flat)
    for i in range(n):
        for k in range(n):
            out[i, k] = flat[i * n + k]


@njit
def _inside_one(z, dom, r):
    n = z.shape[0]
    if dom == DOM_BALL:
        s = 0.0
        for i in range(n):
            s += z[i].real ** 2 + z[i].imag ** 2
        return s < 1.0
    if dom == DOM_POLYDISK:
        for i in range(n):
            if abs(z[i]) >= 1.0:
                return False
        return True
    for i in range(n):
        a = abs(z[i])
        if a <= r or a >= 1.0 / r:
            return False
    return True


@njit
def map_eval_numba(points, kind, exps, coeffs):
    S = points.shape[0]
    m = points.shape[1] if kind == KIND_INVERSE else coeffs.shape[0]
    out = np.empty((S, m), dtype=np.complex128)
    buf = np.empty(m, dtype=np.complex128)
    for s in range(S):
        _map_eval_one(points[s], kind, exps, coeffs, buf)
        out[s, :] = buf
    return out


# ------------------------------------------------------------ damped Newton

@njit
def _residual_one(z, kind, exps, coeffs, fbuf):
    _map_eval_one(z, kind, exps, coeffs, fbuf)
    s = 0.0
    for i in range(z.shape[0]):
        fbuf[i] -= z[i]
        s += fbuf[i].real ** 2 + fbuf[i].imag ** 2
    return np.sqrt(s)


@njit
def _gauss_solve(A, b):
    """Solve A x = b in place (partial pivoting). Returns False if singular."""
    n = A.shape[0]
    for k in range(n):
        p = k
        best = abs(A[k, k])
        for i in range(k + 1, n):
            v = abs(A[i, k])
            if v > best:
                best = v
                p = i
        if best == 0.0:
            return False
        if p != k:
            for j in range(n):
                tmp = A[k, j]
                A[k, j] = A[p, j]
                A[p, j] = tmp
            tmp = b[k]
            b[k] = b[p]
            b[p] = tmp
        for i in range(k + 1, n):
            f = A[i, k] / A[k, k]
            for j in range(k, n):
                A[i, j] -= f * A[k, j]
            b[i] -= f * b[k]
    for k in range(n - 1, -1, -1):
        s = b[k]
        for j in range(k + 1, n):
            s -= A[k, j] * b[j]
        b[k] = s / A[k, k]
    return True


@njit
def newton_batch_numba(starts, kind, exps, coeffs, jexps, jcoeffs, dom, r,
                       tol_fix, max_steps, max_halvings):
    S, n = starts.shape
    out = starts.copy()
    resid = np.empty(S)
    status = np.empty(S, dtype=np.int64)
    f = np.empty(n, dtype=np.complex128)
    fc = np.empty(n, dtype=np.complex128)
    A = np.empty((n, n), dtype=np.complex128)
    cand = np.empty(n, dtype=np.complex128)
    for s in range(S):
        z = out[s]
        status[s] = NEWTON_MAXSTEPS
        res = _residual_one(z, kind, exps, coeffs, f)
        for _ in range(max_steps):
            if res < tol_fix:
                status[s] = NEWTON_OK
                break
            _jac_eval_one(z, kind, jexps, jcoeffs, A)
            for i in range(n):
                A[i, i] -= 1.0
                f[i] = -f[i]
            accepted = False
            rc = res
            if _gauss_solve(A, f):
                t = 1.0
                for _h in range(max_halvings):
                    for i in range(n):
                        cand[i] = z[i] + t * f[i]
                    if _inside_one(cand, dom, r):
                        rc = _residual_one(cand, kind, exps, coeffs, fc)
                        if rc < res:
                            accepted = True
                            break
                    t *= 0.5
            if not accepted:
                # plain iteration z <- phi(z)
                _map_eval_one(z, kind, exps, coeffs, cand)
                if not _inside_one(cand, dom, r):
                    status[s] = NEWTON_LEFT_DOMAIN
                    break
                rc = _residual_one(cand, kind, exps, coeffs, fc)
            for i in range(n):
                z[i] = cand[i]
                f[i] = fc[i]
            res = rc
        if status[s] == NEWTON_MAXSTEPS and res < tol_fix:
            status[s] = NEWTON_OK
        resid[s] = res
    return out, resid, status


def _gauss_solve_numpy(A, b):
    """Batched LU solve; returns (x, ok) with ok False where A is singular."""
    S, n, _ = A.shape
    x = np.zeros_like(b)
    ok = np.zeros(S, dtype=bool)
    idx = np.arange(n)
    diag = A[:, idx, idx]
    # componentwise maps give diagonal systems; divide instead of factoring
    is_diag = ~np.any(A.reshape(S, -1)[:, ~np.eye(n, dtype=bool).ravel()], axis=1)
    d = np.flatnonzero(is_diag)
    if d.size:
        nz = np.all(diag[d] != 0, axis=1)
        good = d[nz]
        x[good] = b[good] / diag[good]
        ok[good] = True
    g = np.flatnonzero(~is_diag)
    if g.size:
        # det and solve share the same LU, so an exact zero pivot shows up as det == 0
        det = np.linalg.det(A[g])
        good = g[np.isfinite(det) & (det != 0)]
        if good.size:
            x[good] = np.linalg.solve(A[good], b[good][..., None])[..., 0]
            ok[good] = True
    return x, ok


def newton_batch_numpy(starts, kind, exps, coeffs, jexps, jcoeffs, dom, r,
                       tol_fix, max_steps, max_halvings):
    S, n = starts.shape
    z = starts.astype(np.complex128).copy()

    def residual(pts):
        f = map_eval_numpy(pts, kind, exps, coeffs) - pts
        return f, np.sqrt(np.sum(f.real**2 + f.imag**2, axis=1))

    f, res = residual(z)
    status = np.full(S, NEWTON_MAXSTEPS, dtype=np.int64)
    active = np.ones(S, dtype=bool)
    for _ in range(max_steps):
        done = active & (res < tol_fix)
        status[done] = NEWTON_OK
        active &= ~done
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        za, fa, ra = z[idx], f[idx], res[idx]
        A = jac_eval_numpy(za, kind, jexps, jcoeffs, n) - np.eye(n)[None]
        d, ok = _gauss_solve_numpy(A, -fa)
        new_z = za.copy()
        new_f = fa.copy()
        new_r = ra.copy()
        accepted = np.zeros(idx.size, dtype=bool)
        t = np.ones(idx.size)
        pending = ok.copy()
        for _h in range(max_halvings):
            p = np.flatnonzero(pending)
            if p.size == 0:
                break
            cand = za[p] + t[p, None] * d[p]
            good = inside_numpy(cand, dom, r)
            fc, rc = residual(cand)
            good &= rc < ra[p]
            g = p[good]
            new_z[g], new_f[g], new_r[g] = cand[good], fc[good], rc[good]
            accepted[g] = True
            pending[g] = False
            t[p] *= 0.5
        fb = np.flatnonzero(~accepted)
        if fb.size:
            cand = map_eval_numpy(za[fb], kind, exps, coeffs)
            good = inside_numpy(cand, dom, r)
            left = fb[~good]
            status[idx[left]] = NEWTON_LEFT_DOMAIN
            active[idx[left]] = False
            g = fb[good]
            if g.size:
                fc, rc = residual(cand[good])
                new_z[g], new_f[g], new_r[g] = cand[good], fc, rc
        keep = np.flatnonzero(active[idx])
        sel = idx[keep]
        z[sel], f[sel], res[sel] = new_z[keep], new_f[keep], new_r[keep]
    done = active & (res < tol_fix)
    status[done] = NEWTON_OK
    return z, res, status


# ------------------------------------------------------------------ dispatch

def _pick(numba_impl, numpy_impl):
    return numba_impl if _accel.USE_NUMBA else numpy_impl


conv = _pick(conv_numba, conv_numpy)
map_eval = _pick(map_eval_numba, map_eval_numpy)
newton_batch = _pick(newton_batch_numba, newton_batch_numpy)
