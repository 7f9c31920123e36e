"""Multi-indices in graded lex order and truncated multivariate power series.

Coefficients are stored densely, indexed by the canonical order returned by
:func:`enumerate_multi_indices`. Within one total degree the order is
lexicographic with the first variable dominant, so for two variables and
degree one ``(1, 0)`` precedes ``(0, 1)``.
"""
from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass
from math import comb
from typing import Mapping, Sequence

import numpy as np

from . import _kernels

MultiIndex = tuple


def _compositions(n, d):
    """All length-n exponent tuples of total degree d, first variable dominant."""
    if n == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _compositions(n - 1, d - first):
            yield (first,) + rest


def enumerate_multi_indices(n: int, N: int) -> list[MultiIndex]:
    """All multi-indices with ``|γ| <= N`` in graded lex order.

    >>> enumerate_multi_indices(2, 1)
    [(0, 0), (1, 0), (0, 1)]
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if N < 0:
        raise ValueError(f"truncation degree must be >= 0, got {N}")
    return list(_basis(n, N))


@functools.lru_cache(maxsize=64)
def _basis(n, N):
    return tuple(itertools.chain.from_iterable(_compositions(n, d) for d in range(N + 1)))


@functools.lru_cache(maxsize=64)
def exponent_array(n: int, N: int) -> np.ndarray:
    arr = np.array(_basis(n, N), dtype=np.int64).reshape(-1, n)
    arr.flags.writeable = False
    return arr


def basis_size(n: int, N: int) -> int:
    return comb(n + N, n)


@functools.lru_cache(maxsize=64)
def index_map(n: int, N: int) -> dict:
    return {g: i for i, g in enumerate(_basis(n, N))}


def _encode(exps, base):
    weights = base ** np.arange(exps.shape[-1], dtype=np.int64)
    return exps @ weights


@functools.lru_cache(maxsize=32)
def addition_table(n: int, N: int) -> np.ndarray:
    """``table[i, j]`` = index of ``γ_i + γ_j`` or -1 when its degree exceeds N."""
    E = exponent_array(n, N)
    base = 2 * N + 1
    keys = _encode(E, base)
    order = np.argsort(keys)
    sorted_keys = keys[order]
    sums = E[:, None, :] + E[None, :, :]
    skeys = _encode(sums, base)
    pos = np.searchsorted(sorted_keys, skeys)
    pos = np.clip(pos, 0, len(keys) - 1)
    table = np.where(sorted_keys[pos] == skeys, order[pos], -1).astype(np.int64)
    table.flags.writeable = False
    return table


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    """Coefficients of a power series in ``n`` variables up to total degree ``N``."""

    n: int
    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (basis_size(self.n, self.N),):
            raise ValueError(
                f"expected {basis_size(self.n, self.N)} coefficients for n={self.n}, "
                f"N={self.N}, got shape {c.shape}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, n, N):
        return cls(n, N, np.zeros(basis_size(n, N), dtype=np.complex128))

    @classmethod
    def constant(cls, value, n, N=0):
        c = np.zeros(basis_size(n, N), dtype=np.complex128)
        c[0] = value
        return cls(n, N, c)

    @classmethod
    def from_dict(cls, n: int, terms: Mapping[Sequence[int], complex], N: int | None = None):
        """Build from ``{exponent tuple: coefficient}``. ``N`` defaults to the top degree present."""
        terms = {tuple(int(e) for e in k): complex(v) for k, v in terms.items()}
        for k in terms:
            if len(k) != n:
                raise ValueError(f"exponent {k} has wrong length for n={n}")
            if min(k) < 0:
                raise ValueError(f"negative exponent in {k}")
        if N is None:
            N = max((sum(k) for k, v in terms.items() if v != 0), default=0)
        idx = index_map(n, N)
        c = np.zeros(basis_size(n, N), dtype=np.complex128)
        for k, v in terms.items():
            if sum(k) <= N:
                c[idx[k]] += v
            elif v != 0:
                raise ValueError(f"term {k} exceeds cap N={N}")
        return cls(n, N, c)

    def as_dict(self) -> dict:
        basis = _basis(self.n, self.N)
        return {basis[i]: complex(self.coeffs[i]) for i in np.flatnonzero(self.coeffs)}

    def __getitem__(self, gamma):
        gamma = tuple(gamma)
        if sum(gamma) > self.N:
            return 0j
        return complex(self.coeffs[index_map(self.n, self.N)[gamma]])

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        if nz.size == 0:
            return 0
        return int(exponent_array(self.n, self.N)[nz[-1]].sum())

    def recap(self, N: int) -> TruncatedSeries:
        """Same series with cap ``N``: pads with zeros or discards higher terms."""
        if N == self.N:
            return self
        D = basis_size(self.n, N)
        c = np.zeros(D, dtype=np.complex128)
        m = min(D, self.coeffs.shape[0])
        c[:m] = self.coeffs[:m]
        return TruncatedSeries(self.n, N, c)

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        _check_dims(self, other)
        N = max(self.N, other.N)
        return TruncatedSeries(self.n, N, self.recap(N).coeffs + other.recap(N).coeffs)

    def scale(self, c: complex) -> TruncatedSeries:
        return TruncatedSeries(self.n, self.N, self.coeffs * c)

    def __call__(self, z):
        return evaluate(self, z)

    def to_json(self) -> dict:
        return series_to_json(self)


def _check_dims(a, b):
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")


def series_multiply(A: TruncatedSeries, B: TruncatedSeries, N: int) -> TruncatedSeries:
    """Cauchy product of ``A`` and ``B`` keeping only terms with ``|γ| <= N``."""
    _check_dims(A, B)
    if N < 0:
        raise ValueError(f"cap must be >= 0, got {N}")
    a = A.recap(N).coeffs
    b = B.recap(N).coeffs
    return TruncatedSeries(A.n, N, _kernels.conv(a, b, addition_table(A.n, N)))


@dataclass(frozen=True, eq=False)
class PolyMap:
    """A polynomial map C^n_in -> C^n_out, one :class:`TruncatedSeries` per output."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("PolyMap needs at least one component")
        n = comps[0].n
        for c in comps:
            if c.n != n:
                raise ValueError("all components must share the input dimension")
        object.__setattr__(self, "components", comps)

    @property
    def n_in(self) -> int:
        return self.components[0].n

    @property
    def n_out(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return max(c.degree for c in self.components)

    @classmethod
    def scalar(cls, series: TruncatedSeries) -> PolyMap:
        return cls((series,))

    @classmethod
    def from_terms(cls, n: int, components: Sequence[Mapping]) -> PolyMap:
        return cls(tuple(TruncatedSeries.from_dict(n, t) for t in components))

    @classmethod
    def identity(cls, n: int) -> PolyMap:
        comps = []
        for i in range(n):
            e = [0] * n
            e[i] = 1
            comps.append({tuple(e): 1.0})
        return cls.from_terms(n, comps)

    @classmethod
    def constant_one(cls, n: int) -> PolyMap:
        return cls((TruncatedSeries.constant(1.0, n),))

    def scale(self, c) -> PolyMap:
        return PolyMap(tuple(s.scale(c) for s in self.components))

    def __call__(self, z):
        return evaluate(self, z)

    def compiled(self):
        """``(exps, coeffs)`` arrays over the union of monomials, as the kernels expect."""
        return _compile(self)

    def jacobian_map(self) -> PolyMap:
        """Exact partial derivatives as a map with ``n_out * n_in`` components (row-major)."""
        n = self.n_in
        out = []
        for comp in self.components:
            for k in range(n):
                terms = {}
                for g, c in comp.as_dict().items():
                    if g[k] == 0:
                        continue
                    h = list(g)
                    h[k] -= 1
                    terms[tuple(h)] = terms.get(tuple(h), 0) + c * g[k]
                if not terms:
                    terms = {(0,) * n: 0.0}
                out.append(TruncatedSeries.from_dict(n, terms))
        return PolyMap(tuple(out))

    def to_json(self) -> list:
        return [series_to_json(c) for c in self.components]


def _compile(pm: PolyMap):
    N = max(c.N for c in pm.components)
    n = pm.n_in
    stacked = np.stack([c.recap(N).coeffs for c in pm.components])
    used = np.flatnonzero(np.any(stacked != 0, axis=0))
    if used.size == 0:
        used = np.array([0])
    exps = np.ascontiguousarray(exponent_array(n, N)[used])
    coeffs = np.ascontiguousarray(stacked[:, used])
    return exps, coeffs


def monomial_of_map(phi: PolyMap, gamma: Sequence[int], N: int) -> TruncatedSeries:
    """Truncated expansion of ``prod_i phi_i ** gamma_i`` by binary powering."""
    if N < 0:
        raise ValueError(f"cap must be >= 0, got {N}")
    gamma = tuple(gamma)
    if len(gamma) != phi.n_out:
        raise ValueError(f"multi-index length {len(gamma)} != number of components {phi.n_out}")
    result = TruncatedSeries.constant(1.0, phi.n_in, N)
    for comp, e in zip(phi.components, gamma):
        if e:
            result = series_multiply(result, _power(comp.recap(N), e, N), N)
    return result


def _power(s, e, N):
    result = TruncatedSeries.constant(1.0, s.n, N)
    base = s
    while e:
        if e & 1:
            result = series_multiply(result, base, N)
        e >>= 1
        if e:
            base = series_multiply(base, base, N)
    return result


def evaluate(p, z):
    """Exact evaluation of a :class:`TruncatedSeries` (returns complex) or :class:`PolyMap` (returns vector)."""
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    if isinstance(p, TruncatedSeries):
        if z.shape != (p.n,):
            raise ValueError(f"point has shape {z.shape}, expected ({p.n},)")
        E = exponent_array(p.n, p.N)
        nz = np.flatnonzero(p.coeffs)
        if nz.size == 0:
            return 0j
        mono = np.prod(z[None, :] ** E[nz], axis=1)
        return complex(np.sum(p.coeffs[nz] * mono))
    if isinstance(p, PolyMap):
        return np.array([evaluate(c, z) for c in p.components])
    raise TypeError(f"cannot evaluate {type(p).__name__}")


# ----------------------------------------------------------------- JSON I/O

def series_to_json(s: TruncatedSeries) -> dict:
    coeffs = {}
    for g, c in s.as_dict().items():
        coeffs[",".join(str(e) for e in g)] = [c.real, c.imag]
    return {"n": s.n, "coeffs": coeffs}


def series_from_json(obj) -> TruncatedSeries:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        n = int(obj["n"])
        raw = obj["coeffs"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"polynomial JSON needs 'n' and 'coeffs': {exc}") from None
    terms = {}
    for key, val in raw.items():
        exps = tuple(int(e) for e in str(key).split(","))
        if isinstance(val, (list, tuple)):
            if len(val) != 2:
                raise ValueError(f"coefficient for {key!r} must be [re, im]")
            c = complex(float(val[0]), float(val[1]))
        else:
            c = complex(float(val))
        terms[exps] = terms.get(exps, 0) + c
    if not terms:
        terms = {(0,) * n: 0.0}
    return TruncatedSeries.from_dict(n, terms)


def polymap_from_json(obj) -> PolyMap:
    if isinstance(obj, dict):
        obj = [obj]
    return PolyMap(tuple(series_from_json(o) for o in obj))
