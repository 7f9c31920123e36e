"""Orbits, fixed points and fixed-point censuses for self-maps of a domain."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .series import evaluate
from .spaces import DomainError, DomainSpec

J_MAX = 10000
TOL_ORBIT = 1e-12
TOL_FIX = 1e-12
EPS_DIV = 1e-6
MERGE_RADIUS = 1e-8
GRID_DENSITY = 9
NEWTON_MAX_STEPS = 200
NEWTON_MAX_HALVINGS = 40
# census stops merging past this many distinct points
SATURATION = 64


class FixedPointError(RuntimeError):
    pass


class ComponentwiseInverse:
    """The map z -> (1/z_1, ..., 1/z_n); a self-map of a product of annuli."""

    kind = _kernels.KIND_INVERSE
    name = "componentwise_inverse"

    def __init__(self, n: int):
        self.n_in = self.n_out = n

    def __call__(self, z):
        return 1.0 / np.atleast_1d(np.asarray(z, dtype=np.complex128))

    def jacobian(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        return np.diag(-1.0 / z**2)

    def to_json(self):
        return {"special": self.name, "n": self.n_in}


def _compiled(phi):
    """Arguments for the map kernels: kind, exps, coeffs, jexps, jcoeffs."""
    if isinstance(phi, ComponentwiseInverse):
        dummy_e = np.zeros((1, phi.n_in), dtype=np.int64)
        dummy_c = np.zeros((phi.n_in, 1), dtype=np.complex128)
        dummy_j = np.zeros((phi.n_in * phi.n_in, 1), dtype=np.complex128)
        return _kernels.KIND_INVERSE, dummy_e, dummy_c, dummy_e, dummy_j
    exps, coeffs = phi.compiled()
    jexps, jcoeffs = phi.jacobian_map().compiled()
    return _kernels.KIND_POLY, exps, coeffs, jexps, jcoeffs


def _check_map(domain, phi):
    if phi.n_in != domain.n or phi.n_out != domain.n:
        raise ValueError(f"map dimension {phi.n_in}->{phi.n_out} does not match domain n={domain.n}")


def jacobian_at(phi, a) -> np.ndarray:
    """Exact ``(∂phi_i/∂z_k)(a)``."""
    if isinstance(phi, ComponentwiseInverse):
        return phi.jacobian(a)
    a = np.atleast_1d(np.asarray(a, dtype=np.complex128))
    flat = evaluate(phi.jacobian_map(), a)
    return flat.reshape(phi.n_out, phi.n_in)


def _apply(phi, z):
    if isinstance(phi, ComponentwiseInverse):
        return phi(z)
    return evaluate(phi, z)


# ------------------------------------------------------------------ orbits

@dataclass
class OrbitRecord:
    start: np.ndarray
    points: list
    boundary_distances: list
    classification: str
    limit: np.ndarray | None = None

    @property
    def converged(self) -> bool:
        return self.classification == "converged"

    def to_dict(self):
        out = {"start": _cvec(self.start), "classification": self.classification,
               "steps": len(self.points) - 1}
        if self.limit is not None:
            out["limit"] = _cvec(self.limit)
        return out

    def write_csv(self, path):
        n = len(self.start)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j"] + [h for i in range(n) for h in (f"re_z{i + 1}", f"im_z{i + 1}")]
                       + ["boundary_distance"])
            for j, (p, d) in enumerate(zip(self.points, self.boundary_distances)):
                w.writerow([j] + [repr(float(v)) for c in p for v in (c.real, c.imag)] + [repr(float(d))])


def _cvec(z):
    return [[complex(c).real, complex(c).imag] for c in np.atleast_1d(z)]


def iterate_orbit(domain: DomainSpec, phi, z0, J: int = J_MAX, tol_orbit: float = TOL_ORBIT,
                  tol_fix: float = TOL_FIX, eps_div: float = EPS_DIV) -> OrbitRecord:
    """Iterate phi from z0 until convergence, boundary divergence, or J steps."""
    if domain.family == "annulus_product":
        raise ValueError("orbit classification is not defined on annulus_product domains")
    if J < 1:
        raise ValueError("J must be >= 1")
    _check_map(domain, phi)
    z = np.atleast_1d(np.asarray(z0, dtype=np.complex128))
    if not domain.contains(z):
        raise DomainError(f"start point {z} is not in the domain")
    points = [z]
    dists = [domain.boundary_distance(z)]
    for j in range(1, J + 1):
        w = _apply(phi, points[-1])
        if not domain.contains(w):
            raise DomainError(f"iterate {j} = {w} left the domain")
        points.append(w)
        dists.append(domain.boundary_distance(w))
        if np.linalg.norm(w - points[-2]) < tol_orbit:
            a = _refine(domain, phi, w, tol_fix)
            if a is not None:
                return OrbitRecord(points[0], points, dists, "converged", a)
        if dists[-1] < eps_div and len(dists) >= 10:
            last = dists[-10:]
            if all(b <= a for a, b in zip(last, last[1:])):
                return OrbitRecord(points[0], points, dists, "boundary_divergent")
    return OrbitRecord(points[0], points, dists, "undecided")


def _refine(domain, phi, z, tol_fix):
    if np.linalg.norm(_apply(phi, z) - z) < tol_fix:
        return z
    try:
        return solve_fixed_point(domain, phi, z, tol_fix)
    except FixedPointError:
        return None


# ------------------------------------------------------------- fixed points

def _newton(domain, phi, starts, tol_fix, max_steps=NEWTON_MAX_STEPS):
    kind, exps, coeffs, jexps, jcoeffs = _compiled(phi)
    starts = np.ascontiguousarray(np.asarray(starts, dtype=np.complex128).reshape(-1, domain.n))
    return _kernels.newton_batch(starts, kind, exps, coeffs, jexps, jcoeffs,
                                 domain.code, float(domain.r or 0.0), float(tol_fix),
                                 int(max_steps), NEWTON_MAX_HALVINGS)


def solve_fixed_point(domain: DomainSpec, phi, z0, tol_fix: float = TOL_FIX,
                      max_steps: int = NEWTON_MAX_STEPS) -> np.ndarray:
    """Damped Newton on ``phi(z) - z`` with plain iteration as fallback."""
    _check_map(domain, phi)
    z0 = np.atleast_1d(np.asarray(z0, dtype=np.complex128))
    if not domain.contains(z0):
        raise DomainError(f"start point {z0} is not in the domain")
    pts, res, status = _newton(domain, phi, z0[None, :], tol_fix, max_steps)
    if status[0] != _kernels.NEWTON_OK:
        reason = "iterate left the domain" if status[0] == _kernels.NEWTON_LEFT_DOMAIN \
            else f"no convergence in {max_steps} steps"
        raise FixedPointError(f"fixed-point solve from {z0} failed: {reason} (residual {res[0]:.3e})")
    return pts[0]


def census_grid(domain: DomainSpec, density: int = GRID_DENSITY) -> np.ndarray:
    """Deterministic starts covering the domain: cell centres of a real lattice
    (polar lattice per factor on annulus products)."""
    n = domain.n
    if domain.family == "annulus_product":
        lo, hi = domain.r, 1.0 / domain.r
        radii = lo + (hi - lo) * (np.arange(density) + 0.5) / density
        angles = 2 * np.pi * np.arange(density) / density + 0.1
        factor = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
        grids = np.meshgrid(*([factor] * n), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)
    axis = (2 * np.arange(density) + 1) / density - 1.0
    grids = np.meshgrid(*([axis] * (2 * n)), indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    pts = flat[:, :n] + 1j * flat[:, n:]
    keep = _kernels.inside_numpy(pts, domain.code, domain.r or 0.0)
    return pts[keep]


@dataclass
class FixedPointReport:
    points: list
    residuals: list
    jacobians: list
    multiplicity_flag: str
    starts: int
    converged_starts: int
    saturated: bool = False
    merge_radius: float = MERGE_RADIUS

    def to_dict(self):
        return {
            "multiplicity_flag": self.multiplicity_flag,
            "saturated": self.saturated,
            "merge_radius": self.merge_radius,
            "starts": self.starts,
            "converged_starts": self.converged_starts,
            "points": [{"a": _cvec(p), "residual": float(r),
                        "jacobian": [[[complex(x).real, complex(x).imag] for x in row] for row in J]}
                       for p, r, J in zip(self.points, self.residuals, self.jacobians)],
        }


def canonical_key(z):
    z = np.atleast_1d(z)
    return tuple(z.real) + tuple(z.imag)


def fixed_point_census(domain: DomainSpec, phi, grid_density: int = GRID_DENSITY,
                       merge_radius: float = MERGE_RADIUS, tol_fix: float = TOL_FIX) -> FixedPointReport:
    """Newton from every lattice start; distinct solutions merged within merge_radius."""
    _check_map(domain, phi)
    starts = census_grid(domain, grid_density)
    pts, res, status = _newton(domain, phi, starts, tol_fix)
    ok = status == _kernels.NEWTON_OK
    pts, res = pts[ok], res[ok]
    reps, rep_res = [], []
    remaining = np.arange(pts.shape[0])
    saturated = False
    while remaining.size:
        if len(reps) >= SATURATION:
            saturated = True
            break
        seed = remaining[0]
        dist = np.linalg.norm(pts[remaining] - pts[seed], axis=1)
        members = remaining[dist <= merge_radius]
        best = members[np.argmin(res[members])]
        reps.append(pts[best])
        rep_res.append(float(res[best]))
        remaining = remaining[dist > merge_radius]
    order = sorted(range(len(reps)), key=lambda i: canonical_key(reps[i]))
    reps = [reps[i] for i in order]
    rep_res = [rep_res[i] for i in order]
    if not reps:
        flag = "none_found"
    elif len(reps) == 1:
        flag = "unique"
    else:
        flag = "multiple"
    jacs = [jacobian_at(phi, a) for a in reps]
    return FixedPointReport(reps, rep_res, jacs, flag, int(starts.shape[0]), int(ok.sum()),
                            saturated, merge_radius)
