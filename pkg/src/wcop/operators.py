"""Galerkin truncations of weighted composition operators f -> psi * (f o phi).

The matrix is taken against the orthonormal monomial basis
``e_γ = z^γ / sqrt(c_γ)`` of the degree-<=N polynomials.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .series import (PolyMap, TruncatedSeries, addition_table, enumerate_multi_indices,
                     evaluate)
from .spaces import (DomainError, SpaceSpec, boundary_samples, interior_samples,
                     kernel_value, orthonormal_kernel_vector)


def _as_scalar(psi):
    if isinstance(psi, TruncatedSeries):
        return psi
    if psi.n_out != 1:
        raise ValueError("weight symbol must have a single component")
    return psi.components[0]


def check_self_map(domain, phi, samples=None):
    """First sample point whose image leaves the open domain, or None."""
    if samples is None:
        samples = interior_samples(domain)
    if phi.n_in != domain.n or phi.n_out != domain.n:
        raise ValueError(
            f"composition symbol is C^{phi.n_in} -> C^{phi.n_out}, domain is {domain.n}-dimensional")
    exps, coeffs = phi.compiled()
    images = _kernels.map_eval(samples, _kernels.KIND_POLY, exps, coeffs)
    inside = _kernels.inside_numpy(images, domain.code, domain.r or 0.0)
    bad = np.flatnonzero(~inside)
    if bad.size:
        return samples[bad[0]]
    return None


@dataclass(eq=False)
class OperatorMatrix:
    space: SpaceSpec
    psi: PolyMap
    phi: PolyMap
    N: int
    entries: np.ndarray
    basis: list = field(repr=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in self.entries:
                w.writerow([f"{_num(x.real)},{_num(x.imag)}" for x in row])

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "psi": self.psi.to_json(),
            "phi": self.phi.to_json(),
            "N": self.N,
            "basis": [list(g) for g in self.basis],
            "entries": [[[x.real, x.imag] for x in row] for row in self.entries],
        }


def build_matrix(space: SpaceSpec, psi, phi: PolyMap, N: int,
                 check_domain: bool = True) -> OperatorMatrix:
    """Compression of ``W_{psi,phi}`` to polynomials of degree <= N."""
    n = space.n
    psi_s = _as_scalar(psi)
    if psi_s.n != n:
        raise ValueError(f"weight symbol has {psi_s.n} variables, space has {n}")
    if check_domain:
        bad = check_self_map(space.domain, phi)
        if bad is not None:
            raise DomainError(f"composition symbol leaves domain at sample z={format_point(bad)}")
    elif phi.n_in != n or phi.n_out != n:
        raise ValueError("composition symbol dimension does not match the space")

    basis = enumerate_multi_indices(n, N)
    D = len(basis)
    table = addition_table(n, N)
    comps = [c.recap(N).coeffs for c in phi.components]
    psi_c = psi_s.recap(N).coeffs

    # phi^β = phi^(β - e_i) * phi_i, with β - e_i earlier in graded order
    powers = np.zeros((D, D), dtype=np.complex128)
    powers[0, 0] = 1.0
    index = {g: i for i, g in enumerate(basis)}
    for j in range(1, D):
        g = basis[j]
        i = next(k for k, e in enumerate(g) if e)
        prev = list(g)
        prev[i] -= 1
        powers[:, j] = _kernels.conv(powers[:, index[tuple(prev)]], comps[i], table)

    cols = np.empty((D, D), dtype=np.complex128)
    for j in range(D):
        cols[:, j] = _kernels.conv(psi_c, powers[:, j], table)
    root = np.sqrt(space.weights(N))
    entries = cols * root[:, None] / root[None, :]
    return OperatorMatrix(space, PolyMap((psi_s,)), phi, N, entries, basis)


def _num(x) -> str:
    # repr of a numpy scalar carries its type name under numpy 2
    return repr(float(x))


def format_point(z) -> str:
    z = np.atleast_1d(z)
    parts = []
    for c in z:
        c = complex(c)
        re, im = round(c.real, 12), round(c.imag, 12)
        parts.append(repr(re) if im == 0 else repr(complex(re, im)))
    return parts[0] if len(parts) == 1 else "(" + ", ".join(parts) + ")"


def genzhu_value(space: SpaceSpec, psi, phi: PolyMap, z) -> float:
    """``|psi(z)|^2 K(phi(z), phi(z)) / K(z, z)``."""
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    w = evaluate(phi, z)
    if not space.domain.contains(w):
        raise DomainError(f"phi(z) = {w} lies outside the domain")
    if not space.domain.contains(z):
        raise DomainError(f"z = {z} lies outside the domain")
    p = evaluate(_as_scalar(psi), z)
    return abs(p) ** 2 * kernel_value(space, w, w).real / kernel_value(space, z, z).real


@dataclass
class GenzhuScan:
    rows: list
    ladder: list
    max_Q_innermost: float
    max_Q_by_shell: dict

    def to_dict(self):
        return {
            "ladder": self.ladder,
            "max_Q_innermost": self.max_Q_innermost,
            "max_Q_by_shell": {repr(k): v for k, v in self.max_Q_by_shell.items()},
            "rows": [{"z": [[c.real, c.imag] for c in z], "distance": d, "Q": q}
                     for z, d, q in self.rows],
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            n = len(self.rows[0][0]) if self.rows else 0
            w.writerow([h for i in range(n) for h in (f"re_z{i + 1}", f"im_z{i + 1}")]
                       + ["boundary_distance", "Q"])
            for z, d, q in self.rows:
                w.writerow([_num(v) for c in z for v in (c.real, c.imag)] + [_num(d), _num(q)])


def genzhu_scan(space: SpaceSpec, psi, phi: PolyMap, ladder, m: int = 32,
                seed=None) -> GenzhuScan:
    """Evaluate Q on boundary shells; rows ordered by direction then shell."""
    kwargs = {} if seed is None else {"seed": seed}
    ladder = [float(e) for e in ladder]
    pts = boundary_samples(space.domain, m, ladder, **kwargs)
    rows = []
    by_shell = {e: 0.0 for e in ladder}
    for k, z in enumerate(pts):
        e = ladder[k % len(ladder)]
        q = genzhu_value(space, psi, phi, z)
        rows.append((z, space.domain.boundary_distance(z), q))
        by_shell[e] = max(by_shell[e], q)
    return GenzhuScan(rows, ladder, by_shell[min(ladder)], by_shell)


def adjoint_kernel_residual(space: SpaceSpec, psi, phi: PolyMap, z, N: int,
                            matrix: OperatorMatrix | None = None) -> float:
    """``|| M^* v_z - conj(psi(z)) v_{phi(z)} ||`` for truncated kernel vectors."""
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    M = matrix if matrix is not None else build_matrix(space, psi, phi, N)
    vz = orthonormal_kernel_vector(space, z, N)
    w = evaluate(phi, z)
    vw = orthonormal_kernel_vector(space, w, N)
    p = evaluate(_as_scalar(psi), z)
    return float(np.linalg.norm(M.entries.conj().T @ vz - np.conj(p) * vw))


def adjoint_rayleigh(space: SpaceSpec, M: OperatorMatrix, z) -> float:
    """``||M^* v_z||^2 / ||v_z||^2``, the truncated counterpart of Q(z)."""
    vz = orthonormal_kernel_vector(space, z, M.N)
    y = M.entries.conj().T @ vz
    return float(np.vdot(y, y).real / np.vdot(vz, vz).real)


# ------------------------------------------------------- compactness proxy

DECAY_THRESHOLD = 0.95
STABILIZATION_THRESHOLD = 1e-3


def singular_values(M: OperatorMatrix | np.ndarray) -> np.ndarray:
    """Singular values from the eigenvalues of ``M^* M``, decreasing."""
    from .spectra import eigenvalues

    A = M.entries if isinstance(M, OperatorMatrix) else np.asarray(M)
    ev = eigenvalues(A.conj().T @ A)
    s = np.sqrt(np.clip(ev.real, 0.0, None))
    return np.sort(s)[::-1]


@dataclass
class CompactnessReport:
    N_ladder: list
    singular_values: np.ndarray
    resolvable: int
    decay_rate: float
    stabilization: float
    verdict: str
    pair_changes: list = field(default_factory=list)
    note: str = "heuristic: finite truncations cannot certify compactness"

    def to_dict(self):
        return {
            "N_ladder": self.N_ladder,
            "singular_values": [float(s) for s in self.singular_values],
            "resolvable_count": self.resolvable,
            "tail_decay_rate": self.decay_rate,
            "top10_stabilization": self.stabilization,
            "top10_change_per_step": self.pair_changes,
            "verdict": self.verdict,
            "note": self.note,
        }


def compactness_proxy(ladder) -> CompactnessReport:
    """Singular-value decay and stabilization across a truncation ladder."""
    mats = sorted(ladder, key=lambda m: m.N)
    if len(mats) < 3:
        raise ValueError("compactness proxy needs at least 3 truncation degrees")
    svs = [singular_values(m) for m in mats]
    s = svs[-1]
    # values below sqrt(u) * s_max are roundoff in eig(M^* M)
    smax = s[0] if s.size else 0.0
    floor = np.sqrt(np.finfo(float).eps * s.size) * smax
    res = s[s > floor]
    tail = res[len(res) // 2:]
    if smax == 0.0:
        rate = 0.0
    elif tail.size >= 2:
        slope = np.polyfit(np.arange(tail.size), np.log(tail), 1)[0]
        rate = float(np.exp(slope))
    else:
        # spectrum collapses to roundoff immediately
        rate = 0.0
    changes = []
    for a, b in zip(svs, svs[1:]):
        k = min(10, a.size, b.size)
        ref = np.maximum(np.abs(b[:k]), np.finfo(float).tiny)
        changes.append(float(np.max(np.abs(b[:k] - a[:k]) / ref)))
    # a coarse first rung may still be far off; what matters is whether the
    # top of the spectrum has settled by the end of the ladder
    stab = changes[-1]
    if rate >= DECAY_THRESHOLD:
        verdict = "not-compact-like"
    elif stab < STABILIZATION_THRESHOLD:
        verdict = "consistent-with-compact"
    else:
        verdict = "inconclusive"
    return CompactnessReport([m.N for m in mats], s, int(res.size), rate, stab, verdict,
                             pair_changes=changes)
