"""Eigenvalues of truncated operators and comparison with predicted spectra."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .series import PolyMap, evaluate

MODULUS_FLOOR = 1e-3
TOL_MATCH = 1e-4
DEDUP_RADIUS = 1e-12
# differences at or below this are roundoff and count as equal when
# checking that the matching error does not grow with N
ROUNDOFF_SLACK = 1e-12


class EigenvalueError(RuntimeError):
    pass


class PredictedSetError(ValueError):
    pass


def sort_spectrum(values) -> np.ndarray:
    """Decreasing modulus, ties broken by increasing argument."""
    v = np.asarray(values, dtype=np.complex128)
    order = np.lexsort((np.angle(v), -np.abs(v)))
    return v[order]


def eigenvalues(M) -> np.ndarray:
    """All eigenvalues of a dense square matrix, with multiplicity.

    LAPACK ``zgeev`` (balancing, Hessenberg reduction, shifted QR); the result
    is sorted with :func:`sort_spectrum`.
    """
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        bad = np.argwhere(~np.isfinite(A))[0]
        raise ValueError(f"non-finite matrix entry at {tuple(int(i) for i in bad)}")
    if A.shape[0] == 0:
        return A.reshape(0)
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenvalueError(f"QR iteration failed to converge: {exc}") from exc
    return sort_spectrum(ev)


def write_eigenvalues_csv(values, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for v in sort_spectrum(values):
            w.writerow([repr(float(v.real)), repr(float(v.imag))])


# ---------------------------------------------------------- predicted sets

@dataclass
class PredictedSet:
    values: np.ndarray
    provenance: str
    psi_at_a: complex
    jacobian_eigenvalues: np.ndarray
    modulus_floor: float

    def to_dict(self):
        return {
            "provenance": self.provenance,
            "psi_at_a": [self.psi_at_a.real, self.psi_at_a.imag],
            "jacobian_eigenvalues": [[v.real, v.imag] for v in self.jacobian_eigenvalues],
            "modulus_floor": self.modulus_floor,
            "values": [[v.real, v.imag] for v in self.values],
        }


def eigen_products(lams, modulus_floor: float = MODULUS_FLOOR,
                   dedup: float = DEDUP_RADIUS) -> np.ndarray:
    """1 together with every product of the ``lams`` (with repetition) of modulus >= floor."""
    lams = [complex(x) for x in lams]
    if any(abs(x) >= 1 for x in lams):
        raise PredictedSetError("predicted set not finitely enumerable below floor: "
                                "an eigenvalue of phi'(a) has modulus >= 1")
    found = [1 + 0j]
    frontier = [1 + 0j]
    while frontier:
        nxt = []
        for s in frontier:
            for lam in lams:
                p = s * lam
                if abs(p) < modulus_floor:
                    continue
                if any(abs(p - q) <= dedup for q in found):
                    continue
                found.append(p)
                nxt.append(p)
        frontier = nxt
    return sort_spectrum(found)


def _auto_provenance(psi, n):
    const = psi.degree == 0
    if n == 1:
        return "unweighted-powers" if const and psi.coeffs[0] == 1 else "weighted-powers"
    # the weighted several-variable formula is conjectural, and the tag says so
    return "unweighted-products" if const and psi.coeffs[0] == 1 else "weighted-products-conjectural"


def predicted_set(psi, a, J, modulus_floor: float = MODULUS_FLOOR,
                  provenance: str = "auto") -> PredictedSet:
    """``{0} ∪ {psi(a) σ}`` with σ = 1 or a product of eigenvalues of ``J``.

    Only values with ``|psi(a) σ| >= modulus_floor`` are listed.
    """
    if isinstance(psi, PolyMap):
        psi = psi.components[0]
    a = np.atleast_1d(np.asarray(a, dtype=np.complex128))
    J = np.atleast_2d(np.asarray(J, dtype=np.complex128))
    pa = evaluate(psi, a)
    lams = eigenvalues(J)
    # the floor bounds the predicted eigenvalue psi(a)*σ, not σ itself
    if pa == 0:
        eigen_products(lams, 1.0)  # still reject non-contracting jacobians
        sig = np.zeros(0, dtype=np.complex128)
    else:
        sig = eigen_products(lams, modulus_floor / abs(pa))
    vals = pa * sig
    # zero is always part of the predicted set
    vals = np.concatenate([[0j], vals[np.abs(vals) > 0]])
    prov = _auto_provenance(psi, len(a)) if provenance == "auto" else provenance
    return PredictedSet(sort_spectrum(vals), prov, complex(pa), lams, modulus_floor)


# ---------------------------------------------------------------- matching

@dataclass
class SpectrumReport:
    N_ladder: list
    computed: dict
    predicted: PredictedSet
    matching: list
    unmatched_computed_above_floor: list
    convergence_table: list
    tol_match: float
    verdict: str

    def to_dict(self):
        def c(v):
            return [complex(v).real, complex(v).imag]
        return {
            "N_ladder": self.N_ladder,
            "tol_match": self.tol_match,
            "verdict": self.verdict,
            "predicted": self.predicted.to_dict(),
            "matching": [{"predicted": c(p), "computed": None if q is None else c(q),
                          "difference": d, "matched": m} for p, q, d, m in self.matching],
            "unmatched_computed_above_floor": [c(v) for v in self.unmatched_computed_above_floor],
            "convergence_table": [{"predicted": c(p), "differences": diffs}
                                  for p, diffs in self.convergence_table],
            "computed": {str(N): [c(v) for v in vals] for N, vals in self.computed.items()},
        }


def _greedy(predicted, computed, tol_match):
    """Pair each predicted value with the nearest unused computed value."""
    used = np.zeros(len(computed), dtype=bool)
    pairs = []
    for p in predicted:
        if len(computed) == 0 or used.all():
            pairs.append((p, None, float("inf")))
            continue
        if p == 0:
            # 0 is a limit point: take the smallest-modulus computed value
            mods = np.where(used, np.inf, np.abs(computed))
        else:
            mods = np.where(used, np.inf, np.abs(computed - p))
        k = int(np.argmin(mods))
        used[k] = True
        pairs.append((p, computed[k], float(mods[k])))
    return pairs, used


def match_spectra(computed: dict, predicted: PredictedSet, tol_match: float = TOL_MATCH) -> SpectrumReport:
    """Greedy matching in decreasing predicted modulus; see :class:`SpectrumReport`."""
    if not computed:
        raise ValueError("empty N ladder")
    ladder = sorted(computed)
    computed = {N: sort_spectrum(computed[N]) for N in ladder}
    preds = sort_spectrum(predicted.values)
    top = computed[ladder[-1]]
    pairs, used = _greedy(preds, top, tol_match)
    floor = float(np.min(np.abs(top))) if len(top) else float("inf")
    matching = [(p, q, d, (floor if p == 0 else d) < tol_match) for p, q, d in pairs]
    unmatched = [v for v, u in zip(top, used) if not u and abs(v) >= predicted.modulus_floor]

    per_N = {N: _greedy(preds, computed[N], tol_match)[0] for N in ladder}
    table = [(p, [per_N[N][i][2] for N in ladder]) for i, p in enumerate(preds)]

    required = [m for m in matching if abs(m[0]) >= 2 * tol_match]
    all_match = all(m[3] for m in required)
    nonzero = [row for row in table if row[0] != 0]
    half = nonzero[: (len(nonzero) + 1) // 2]
    monotone = all(
        b <= a + ROUNDOFF_SLACK for _, diffs in half for a, b in zip(diffs, diffs[1:]))
    verdict = "supports-formula" if all_match and monotone else "does-not-support"
    return SpectrumReport(ladder, computed, predicted, matching, unmatched, table,
                          tol_match, verdict)


# ------------------------------------------------------ truncation study

@dataclass
class ConvergenceStudy:
    N_ladder: list
    top: dict
    drift: list

    def to_dict(self):
        return {
            "N_ladder": self.N_ladder,
            "top": {str(N): [[v.real, v.imag] for v in vals] for N, vals in self.top.items()},
            "drift": [[float(x) for x in d] for d in self.drift],
        }


def truncation_convergence_study(space, psi, phi, N_ladder, k_top: int = 5,
                                 matrices=None) -> ConvergenceStudy:
    """Top-k eigenvalues by modulus per N and their drift between consecutive N."""
    from .operators import build_matrix

    ladder = list(N_ladder)
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("N ladder must be strictly increasing")
    if k_top < 1:
        raise ValueError("k_top must be >= 1")
    top = {}
    for N in ladder:
        M = matrices[N] if matrices is not None else build_matrix(space, psi, phi, N)
        top[N] = eigenvalues(M.entries)[:k_top]
    drift = []
    for a, b in zip(ladder, ladder[1:]):
        k = min(len(top[a]), len(top[b]))
        drift.append(np.abs(top[b][:k] - top[a][:k]))
    return ConvergenceStudy(ladder, top, drift)
