"""Hilbert space presets on the disk, ball and polydisk.

Every preset is diagonal in the monomial basis: ``||z^γ||^2 = c_γ`` and the
kernel is ``K(z, w) = Σ z^γ conj(w)^γ / c_γ``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma, exp

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .series import PolyMap, TruncatedSeries, evaluate, exponent_array
from . import _kernels

DOMAIN_FAMILIES = ("disk", "ball", "polydisk", "annulus_product")
SPACE_FAMILIES = ("weighted_hardy_disk", "hardy_ball", "bergman_ball",
                  "hardy_polydisk", "bergman_polydisk")
B_RULES = ("ones", "bergman", "dirichlet")

# committed seed for sphere directions; reports must be byte-reproducible
DEFAULT_DIRECTION_SEED = 20050825

SERIES_RTOL = 1e-15
SERIES_MAX_TERMS = 500


class DomainError(ValueError):
    """A point or a map image lies outside the domain."""


class SeriesNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    family: str
    n: int = 1
    r: float | None = None

    def __post_init__(self):
        if self.family not in DOMAIN_FAMILIES:
            raise ValueError(f"unknown domain family {self.family!r}")
        if self.n < 1:
            raise ValueError("domain dimension must be >= 1")
        if self.family == "disk" and self.n != 1:
            raise ValueError("disk is one-dimensional; use ball or polydisk")
        if self.family == "annulus_product":
            if self.r is None or not 0 < self.r < 1:
                raise ValueError("annulus_product needs inner radius 0 < r < 1")

    @property
    def code(self) -> int:
        return {"disk": _kernels.DOM_BALL, "ball": _kernels.DOM_BALL,
                "polydisk": _kernels.DOM_POLYDISK,
                "annulus_product": _kernels.DOM_ANNULUS}[self.family]

    @property
    def inradius(self) -> float:
        if self.family == "annulus_product":
            return (1.0 / self.r - self.r) / 2.0
        return 1.0

    def contains(self, z) -> bool:
        z = _point(z, self.n)
        return bool(_kernels.inside_numpy(z[None, :], self.code, self.r or 0.0)[0])

    def in_closure(self, z) -> bool:
        z = _point(z, self.n)
        mod = np.abs(z)
        if self.family in ("disk", "ball"):
            return float(np.sum(mod**2)) <= 1.0
        if self.family == "polydisk":
            return float(mod.max()) <= 1.0
        return bool(np.all((mod >= self.r) & (mod <= 1.0 / self.r)))

    def boundary_distance(self, z) -> float:
        z = _point(z, self.n)
        mod = np.abs(z)
        if self.family in ("disk", "ball"):
            return 1.0 - float(np.linalg.norm(z))
        if self.family == "polydisk":
            return 1.0 - float(mod.max())
        return float(np.min(np.minimum(mod - self.r, 1.0 / self.r - mod)))

    def to_json(self) -> dict:
        out = {"family": self.family, "n": self.n}
        if self.r is not None:
            out["r"] = self.r
        return out

    @classmethod
    def from_json(cls, obj) -> DomainSpec:
        try:
            return cls(obj["family"], int(obj.get("n", 1)),
                       None if obj.get("r") is None else float(obj["r"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"bad domain JSON: {exc}") from None


def _point(z, n):
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    if z.shape != (n,):
        raise ValueError(f"point has shape {z.shape}, expected ({n},)")
    return z


_FAMILY_DOMAINS = {
    "weighted_hardy_disk": ("disk",),
    "hardy_ball": ("disk", "ball"),
    "bergman_ball": ("disk", "ball"),
    "hardy_polydisk": ("disk", "polydisk"),
    "bergman_polydisk": ("disk", "polydisk"),
}


@dataclass(frozen=True)
class SpaceSpec:
    """A preset functional Hilbert space.

    ``b`` is only used by ``weighted_hardy_disk``: a rule name from
    :data:`B_RULES` or a tuple of positive reals ``b_0, b_1, ...`` (norms of
    the monomials, so ``c_j = b_j ** 2``).
    """

    domain: DomainSpec
    family: str
    b: str | tuple = "ones"
    alpha: float = 0.0
    _weights: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in SPACE_FAMILIES:
            raise ValueError(f"unknown space family {self.family!r}")
        if self.domain.family not in _FAMILY_DOMAINS[self.family]:
            raise ValueError(f"{self.family} is not defined on a {self.domain.family}")
        if self.family.startswith("bergman") and not self.alpha > -1:
            raise ValueError(f"Bergman parameter alpha must be > -1, got {self.alpha}")
        if self.family == "weighted_hardy_disk":
            if isinstance(self.b, str):
                if self.b not in B_RULES:
                    raise ValueError(f"unknown weight rule {self.b!r}")
            else:
                b = tuple(float(x) for x in self.b)
                if not b or min(b) <= 0:
                    raise ValueError("weight sequence must be non-empty with every b_j > 0")
                object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.domain.n

    def b_value(self, j: int) -> float:
        if isinstance(self.b, tuple):
            if j >= len(self.b):
                raise ValueError(f"weight sequence has {len(self.b)} entries; b_{j} requested")
            return self.b[j]
        if self.b == "ones":
            return 1.0
        if self.b == "bergman":
            return (j + 1) ** -0.5
        return (j + 1) ** 0.5  # dirichlet

    def weights(self, N: int) -> np.ndarray:
        """``c_γ`` for every multi-index up to degree N, in canonical order."""
        w = self._weights.get(N)
        if w is None:
            E = exponent_array(self.n, N)
            w = np.array([_weight(self, g) for g in E])
            w.flags.writeable = False
            self._weights[N] = w
        return w

    @property
    def is_classical_hardy_disk(self) -> bool:
        return self.family == "weighted_hardy_disk" and self.b == "ones"

    def to_json(self) -> dict:
        out = {"domain": self.domain.to_json(), "space": self.family}
        if self.family == "weighted_hardy_disk":
            out["b"] = {"list": list(self.b)} if isinstance(self.b, tuple) else {"rule": self.b}
        if self.family.startswith("bergman"):
            out["alpha"] = self.alpha
        return out

    @classmethod
    def from_json(cls, obj) -> SpaceSpec:
        try:
            domain = DomainSpec.from_json(obj["domain"])
            family = obj["space"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"space JSON needs 'domain' and 'space': {exc}") from None
        b = "ones"
        if "b" in obj:
            spec = obj["b"]
            if "rule" in spec:
                b = spec["rule"]
            elif "list" in spec:
                b = tuple(spec["list"])
            else:
                raise ValueError("'b' must carry 'rule' or 'list'")
        return cls(domain, family, b, float(obj.get("alpha", 0.0)))


def hardy_disk() -> SpaceSpec:
    return SpaceSpec(DomainSpec("disk", 1), "weighted_hardy_disk")


def _log_multifactorial(g):
    return sum(lgamma(e + 1) for e in g)


def _weight(space, g):
    g = tuple(int(e) for e in g)
    d = sum(g)
    n = space.n
    fam = space.family
    if fam == "weighted_hardy_disk":
        return space.b_value(g[0]) ** 2
    if fam == "hardy_polydisk":
        return 1.0
    if fam in ("hardy_ball", "bergman_ball"):
        s = n if fam == "hardy_ball" else n + 1 + space.alpha
        return exp(_log_multifactorial(g) + lgamma(s) - lgamma(s + d))
    s = 2 + space.alpha
    return exp(sum(lgamma(e + 1) + lgamma(s) - lgamma(s + e) for e in g))


def monomial_weight(space: SpaceSpec, gamma) -> float:
    """``||z^γ||^2`` for the preset."""
    gamma = tuple(gamma)
    if len(gamma) != space.n:
        raise ValueError(f"multi-index {gamma} does not match n={space.n}")
    return _weight(space, gamma)


def _inner(z, w):
    return complex(np.sum(z * np.conj(w)))


def kernel_value(space: SpaceSpec, z, w) -> complex:
    """Closed-form ``K(z, w)``; general weight sequences fall back to the series."""
    n = space.n
    z = _point(z, n)
    w = _point(w, n)
    for p in (z, w):
        if not space.domain.in_closure(p):
            raise DomainError(f"point {p} lies outside the closed domain")
    fam = space.family
    if fam == "weighted_hardy_disk":
        x = complex(z[0] * np.conj(w[0]))
        if space.b == "ones":
            return _reciprocal_power(1.0 - x, 1.0)
        if space.b == "bergman":
            return _reciprocal_power(1.0 - x, 2.0)
        if space.b == "dirichlet":
            if abs(x) < 1e-8:
                return 1.0 + x / 2 + x * x / 3
            if x == 1:
                raise DomainError("kernel is singular at this boundary pair")
            return complex(-np.log(1.0 - x) / x)
        return _kernel_series_converged(space, z, w)
    if fam in ("hardy_ball", "bergman_ball"):
        s = n if fam == "hardy_ball" else n + 1 + space.alpha
        return _reciprocal_power(1.0 - _inner(z, w), s)
    s = 1.0 if fam == "hardy_polydisk" else 2.0 + space.alpha
    out = 1.0 + 0j
    for zi, wi in zip(z, w):
        out *= _reciprocal_power(1.0 - zi * np.conj(wi), s)
    return complex(out)


def _reciprocal_power(x, s):
    if x == 0:
        raise DomainError("kernel is singular at this boundary pair")
    if s == 1.0:
        return complex(1.0 / x)
    # principal branch; Re(x) > 0 inside the domain
    return complex(np.exp(-s * np.log(complex(x))))


def _kernel_series_converged(space, z, w):
    x = complex(z[0] * np.conj(w[0]))
    total = 0j
    term_pow = 1 + 0j
    for j in range(SERIES_MAX_TERMS + 1):
        term = term_pow / space.b_value(j) ** 2
        total += term
        if abs(term) < SERIES_RTOL * abs(total):
            return total
        term_pow *= x
    raise SeriesNotConverged(
        f"kernel series did not reach relative tolerance {SERIES_RTOL} in "
        f"{SERIES_MAX_TERMS} terms at z*conj(w)={x}")


def kernel_series_value(space: SpaceSpec, z, w, N: int) -> complex:
    """Degree-N partial sum ``Σ_{|γ|<=N} z^γ conj(w)^γ / c_γ``."""
    z = _point(z, space.n)
    w = _point(w, space.n)
    E = exponent_array(space.n, N)
    terms = np.prod((z * np.conj(w))[None, :] ** E, axis=1)
    return complex(np.sum(terms / space.weights(N)))


def kernel_coefficients(space: SpaceSpec, z, N: int) -> np.ndarray:
    """Monomial coefficients of ``K_z`` (the vector ``conj(z^γ) / c_γ``)."""
    z = _point(z, space.n)
    E = exponent_array(space.n, N)
    return np.conj(np.prod(z[None, :] ** E, axis=1)) / space.weights(N)


def orthonormal_kernel_vector(space: SpaceSpec, z, N: int) -> np.ndarray:
    """Coordinates of ``K_z`` against ``e_γ = z^γ / sqrt(c_γ)``, truncated at N."""
    z = _point(z, space.n)
    E = exponent_array(space.n, N)
    return np.conj(np.prod(z[None, :] ** E, axis=1)) / np.sqrt(space.weights(N))


def inner_product(space: SpaceSpec, f: TruncatedSeries, g: TruncatedSeries) -> complex:
    """``<f, g> = Σ c_γ f_γ conj(g_γ)`` over the common truncation."""
    N = max(f.N, g.N)
    a = f.recap(N).coeffs
    b = g.recap(N).coeffs
    return complex(np.sum(space.weights(N) * a * np.conj(b)))


def normalized_kernel_pairing(space: SpaceSpec, p, z) -> complex:
    """``<p, k_z>`` with ``k_z = K_z / ||K_z||``, i.e. ``p(z) / sqrt(K(z, z))``."""
    if isinstance(p, PolyMap):
        if p.n_out != 1:
            raise ValueError("pairing needs a scalar polynomial")
        p = p.components[0]
        return normalized_kernel_pairing(space, p, z)
    kzz = kernel_value(space, z, z).real
    return evaluate(p, z) / np.sqrt(kzz)


# ----------------------------------------------------------- sampling

def sphere_directions(n: int, m: int, seed: int = DEFAULT_DIRECTION_SEED) -> np.ndarray:
    """``m`` unit vectors in C^n from a scrambled Halton sequence."""
    sampler = qmc.Halton(d=2 * n, scramble=True, seed=seed)
    u = sampler.random(m)
    u = np.clip(u, 1e-12, 1 - 1e-12)
    g = _normal.ppf(u)
    v = g[:, :n] + 1j * g[:, n:]
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _polydisk_angles(n, m):
    # roots of unity per factor, with co-prime strides so factors decorrelate
    strides = np.array([2 * i + 1 for i in range(n)])
    k = np.arange(m)[:, None]
    return np.exp(2j * np.pi * ((k * strides[None, :]) % max(m, 1)) / max(m, 1))


def boundary_directions(domain: DomainSpec, m: int, seed: int = DEFAULT_DIRECTION_SEED):
    fam = domain.family
    if fam == "disk":
        return np.exp(2j * np.pi * np.arange(m) / m)[:, None]
    if fam == "ball":
        if domain.n == 1:
            return np.exp(2j * np.pi * np.arange(m) / m)[:, None]
        return sphere_directions(domain.n, m, seed)
    return _polydisk_angles(domain.n, m)


def boundary_samples(domain: DomainSpec, m: int, ladder, seed: int = DEFAULT_DIRECTION_SEED):
    """Points at boundary distance ``ε_k`` along ``m`` fixed directions.

    Returns an array of shape ``(m * len(ladder), n)`` ordered by direction,
    then by shell.
    """
    ladder = [float(e) for e in ladder]
    for e in ladder:
        if not 0 < e < domain.inradius:
            raise ValueError(f"shell distance {e} outside (0, {domain.inradius})")
    dirs = boundary_directions(domain, m, seed)
    pts = []
    for d in range(m):
        for e in ladder:
            if domain.family == "annulus_product":
                rad = domain.r + e if d % 2 == 0 else 1.0 / domain.r - e
                pts.append(rad * dirs[d])
            else:
                pts.append((1.0 - e) * dirs[d])
    return np.array(pts, dtype=np.complex128).reshape(-1, domain.n)


def interior_samples(domain: DomainSpec, count: int = 200) -> np.ndarray:
    """Deterministic interior points, ordered by shell radius then direction."""
    shells = (0.2, 0.4, 0.6, 0.8, 0.95)
    per = count // len(shells)
    dirs = boundary_directions(domain, per, DEFAULT_DIRECTION_SEED)
    pts = []
    for s in shells:
        for d in range(per):
            if domain.family == "annulus_product":
                lo, hi = domain.r, 1.0 / domain.r
                pts.append((lo + s * (hi - lo)) * dirs[d])
            else:
                pts.append(s * dirs[d])
    return np.array(pts, dtype=np.complex128).reshape(-1, domain.n)


@dataclass
class LiminfEstimate:
    nu: float
    bounded_away: bool
    threshold: float
    argmin: np.ndarray
    shell: float

    def to_dict(self):
        return {"nu_hat": self.nu, "bounded_away_from_zero": self.bounded_away,
                "threshold": self.threshold, "shell": self.shell,
                "argmin": [[c.real, c.imag] for c in self.argmin]}


def estimate_weight_liminf(space_or_domain, psi, m: int = 64,
                           ladder=(1e-2, 1e-4, 1e-6, 1e-8), threshold: float = 1e-6,
                           seed: int = DEFAULT_DIRECTION_SEED) -> LiminfEstimate:
    """Smallest ``|ψ|`` over the innermost boundary shell."""
    domain = space_or_domain.domain if isinstance(space_or_domain, SpaceSpec) else space_or_domain
    if isinstance(psi, PolyMap):
        if psi.n_out != 1:
            raise ValueError("weight symbol must be scalar")
        psi = psi.components[0]
    inner = min(ladder)
    pts = boundary_samples(domain, m, [inner], seed)
    vals = np.array([abs(evaluate(psi, p)) for p in pts])
    k = int(np.argmin(vals))
    nu = float(vals[k])
    return LiminfEstimate(nu, nu > threshold, threshold, pts[k], inner)
