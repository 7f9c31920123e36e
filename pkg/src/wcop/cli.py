"""Command-line front end: ``wcop [COMMAND] --config cfg.json``.

The config file is the only input channel besides the flag overrides below;
every report embeds the resolved config with defaults filled in.
"""
from __future__ import annotations

import argparse
import copy
import datetime as _dt
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import dynamics, operators, spectra
from .dynamics import ComponentwiseInverse, FixedPointError
from .report import dumps
from .series import PolyMap, TruncatedSeries, polymap_from_json
from .spaces import (DEFAULT_DIRECTION_SEED, DomainError, DomainSpec, SpaceSpec,
                     estimate_weight_liminf)

log = logging.getLogger("wcop")

COMMANDS = ("fixed-point", "census", "genzhu-scan", "adjoint-check", "spectrum",
            "verify-conjecture", "compactness-proxy")

DEFAULT_TOLERANCES = {
    "tol_match": spectra.TOL_MATCH,
    "modulus_floor": spectra.MODULUS_FLOOR,
    "tol_fix": dynamics.TOL_FIX,
    "tol_orbit": dynamics.TOL_ORBIT,
    "eps_div": dynamics.EPS_DIV,
    "merge_radius": dynamics.MERGE_RADIUS,
    "liminf_threshold": 1e-6,
}

DEFAULTS = {
    "N_ladder": [20, 40, 60],
    "output_dir": "wcop-out",
    "seed": DEFAULT_DIRECTION_SEED,
    "grid_density": dynamics.GRID_DENSITY,
    "ladder": [1e-1, 1e-2, 1e-3],
    "directions": 32,
    "k_top": 5,
    "orbit_steps": dynamics.J_MAX,
}

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2

ADJOINT_ROUNDOFF = 1e-14


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    domain: DomainSpec
    space: SpaceSpec | None
    psi: TruncatedSeries
    phi: Any
    N_ladder: list
    tolerances: dict
    output_dir: Path
    seed: int
    raw: dict

    @property
    def n(self):
        return self.domain.n


# ------------------------------------------------------------- parsing

def _parse_point(obj, n, field):
    if obj is None:
        return None
    if isinstance(obj, (int, float)):
        obj = [obj]
    pts = []
    for c in obj:
        if isinstance(c, (list, tuple)):
            if len(c) != 2:
                raise ConfigError(f"{field}: complex entries must be [re, im]")
            pts.append(complex(float(c[0]), float(c[1])))
        else:
            pts.append(complex(float(c)))
    if len(pts) != n:
        raise ConfigError(f"{field}: expected {n} coordinates, got {len(pts)}")
    return np.array(pts)


def _parse_phi(obj, n):
    if isinstance(obj, dict) and "special" in obj:
        if obj["special"] not in ("componentwise_inverse", "inverse"):
            raise ConfigError(f"phi: unknown special map {obj['special']!r}")
        return ComponentwiseInverse(n)
    try:
        return polymap_from_json(obj)
    except (ValueError, TypeError, KeyError, AttributeError) as exc:
        raise ConfigError(f"phi: {exc}") from None


def _space_and_domain(obj):
    if not isinstance(obj, dict):
        raise ConfigError("space: expected an object")
    if "space" in obj:
        try:
            sp = SpaceSpec.from_json(obj)
        except ValueError as exc:
            raise ConfigError(f"space: {exc}") from None
        return sp, sp.domain
    try:
        return None, DomainSpec.from_json(obj["domain"] if "domain" in obj else obj)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"space.domain: {exc}") from None


def resolve(raw: dict) -> dict:
    """Config with every default filled in."""
    cfg = copy.deepcopy(raw)
    for k, v in DEFAULTS.items():
        cfg.setdefault(k, copy.deepcopy(v))
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(cfg.get("tolerances") or {})
    cfg["tolerances"] = tol
    return cfg


def load_config(raw: dict) -> ExperimentConfig:
    cfg = resolve(raw)
    cmd = cfg.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"command: must be one of {', '.join(COMMANDS)}, got {cmd!r}")
    if "space" not in cfg:
        raise ConfigError("space: missing")
    space, domain = _space_and_domain(cfg["space"])
    n = domain.n
    if "phi" not in cfg:
        raise ConfigError("phi: missing")
    phi = _parse_phi(cfg["phi"], n)
    if phi.n_in != n or phi.n_out != n:
        raise ConfigError(f"phi: maps C^{phi.n_in} -> C^{phi.n_out}, domain has n={n}")
    if "psi" in cfg:
        try:
            psi = polymap_from_json(cfg["psi"])
        except (ValueError, TypeError, KeyError, AttributeError) as exc:
            raise ConfigError(f"psi: {exc}") from None
        if psi.n_out != 1 or psi.n_in != n:
            raise ConfigError("psi: must be one polynomial in the domain's variables")
        psi = psi.components[0]
    else:
        psi = TruncatedSeries.constant(1.0, n)
        cfg["psi"] = psi.to_json()
    ladder = [int(x) for x in cfg["N_ladder"]]
    return ExperimentConfig(cmd, domain, space, psi, phi, ladder, cfg["tolerances"],
                            Path(cfg["output_dir"]), int(cfg["seed"]), cfg)


def validate(raw: dict) -> list[str]:
    """Diagnostics for a config; an empty list means valid."""
    diags = []
    try:
        cfg = load_config(raw)
    except ConfigError as exc:
        return [str(exc)]
    except (ValueError, TypeError) as exc:
        return [f"config: {exc}"]
    ladder = cfg.N_ladder
    if not ladder:
        diags.append("N_ladder is empty")
    elif any(b <= a for a, b in zip(ladder, ladder[1:])):
        diags.append("N_ladder not increasing")
    if any(N < 0 for N in ladder):
        diags.append("N_ladder has a negative entry")
    for k, v in cfg.tolerances.items():
        if not isinstance(v, (int, float)) or not v > 0:
            diags.append(f"tolerance {k} must be positive, got {v!r}")
    needs_space = cfg.command not in ("fixed-point", "census")
    if needs_space and cfg.space is None:
        diags.append(f"space: command {cfg.command} needs a Hilbert space preset, not a bare domain")
    if cfg.command in ("spectrum", "verify-conjecture", "compactness-proxy") and len(ladder) < (
            3 if cfg.command == "compactness-proxy" else 1):
        diags.append("N_ladder too short for this command")
    if isinstance(cfg.phi, PolyMap):
        bad = operators.check_self_map(cfg.domain, cfg.phi)
        if bad is not None:
            diags.append(f"composition symbol leaves domain at sample z={operators.format_point(bad)}")
    elif cfg.domain.family != "annulus_product":
        diags.append("phi: the componentwise inverse map is only a self-map of annulus_product")
    return diags


# ------------------------------------------------------------- commands

def _cvec(z):
    return [[complex(c).real, complex(c).imag] for c in np.atleast_1d(z)]


def _default_start(cfg):
    z0 = _parse_point(cfg.raw.get("z0"), cfg.n, "z0")
    if z0 is not None:
        return z0
    if cfg.domain.family == "annulus_product":
        return np.full(cfg.n, (cfg.domain.r + 1.0 / cfg.domain.r) / 2, dtype=complex)
    return np.zeros(cfg.n, dtype=complex)


def _cmd_fixed_point(cfg):
    tol = cfg.tolerances
    z0 = _default_start(cfg)
    result = {"z0": _cvec(z0)}
    try:
        a = dynamics.solve_fixed_point(cfg.domain, cfg.phi, z0, tol["tol_fix"])
    except FixedPointError as exc:
        result.update(verdict="no-fixed-point-found", message=str(exc))
        return result, EXIT_VERDICT, {}
    J = dynamics.jacobian_at(cfg.phi, a)
    result.update(verdict="success", a=_cvec(a),
                  residual=float(np.linalg.norm(cfg.phi(a) - a)),
                  jacobian=[[[x.real, x.imag] for x in row] for row in J])
    csvs = {}
    if cfg.domain.family != "annulus_product":
        orbit = dynamics.iterate_orbit(cfg.domain, cfg.phi, z0, int(cfg.raw["orbit_steps"]),
                                       tol["tol_orbit"], tol["tol_fix"], tol["eps_div"])
        result["orbit"] = orbit.to_dict()
        csvs["orbit"] = orbit.write_csv
    return result, EXIT_OK, csvs


def _cmd_census(cfg):
    rep = dynamics.fixed_point_census(cfg.domain, cfg.phi, int(cfg.raw["grid_density"]),
                                      cfg.tolerances["merge_radius"], cfg.tolerances["tol_fix"])
    d = rep.to_dict()
    d["verdict"] = "success"
    return d, EXIT_OK, {}


def _cmd_genzhu(cfg):
    scan = operators.genzhu_scan(cfg.space, cfg.psi, cfg.phi, cfg.raw["ladder"],
                                 int(cfg.raw["directions"]), cfg.seed)
    shells = sorted(scan.max_Q_by_shell, reverse=True)
    maxima = [scan.max_Q_by_shell[e] for e in shells]
    decays = all(b < a for a, b in zip(maxima, maxima[1:]))
    liminf = estimate_weight_liminf(cfg.space, cfg.psi, int(cfg.raw["directions"]),
                                    threshold=cfg.tolerances["liminf_threshold"], seed=cfg.seed)
    d = scan.to_dict()
    d["verdict"] = "decays" if decays else "no-decay"
    d["weight_liminf"] = liminf.to_dict()
    return d, EXIT_OK, {"scan": scan.write_csv}


def _point_or_default(cfg):
    z = _parse_point(cfg.raw.get("z"), cfg.n, "z")
    return z if z is not None else np.full(cfg.n, 0.3, dtype=complex)


def _cmd_adjoint(cfg):
    z = _point_or_default(cfg)
    rows = []
    q = operators.genzhu_value(cfg.space, cfg.psi, cfg.phi, z)
    for N in cfg.N_ladder:
        M = operators.build_matrix(cfg.space, cfg.psi, cfg.phi, N)
        rows.append({"N": N,
                     "residual": operators.adjoint_kernel_residual(cfg.space, cfg.psi, cfg.phi, z, N, M),
                     "rayleigh": operators.adjoint_rayleigh(cfg.space, M, z)})
    res = [r["residual"] for r in rows]
    # once both residuals sit at roundoff the comparison carries no signal
    decreasing = all(b < a or max(a, b) < ADJOINT_ROUNDOFF for a, b in zip(res, res[1:]))
    return {"z": _cvec(z), "Q": q, "rows": rows,
            "verdict": "decreasing" if decreasing else "not-decreasing"}, EXIT_OK, {}


def _matrices(cfg):
    return {N: operators.build_matrix(cfg.space, cfg.psi, cfg.phi, N) for N in cfg.N_ladder}


def _cmd_spectrum(cfg):
    mats = _matrices(cfg)
    comp = {N: spectra.eigenvalues(M.entries) for N, M in mats.items()}
    study = spectra.truncation_convergence_study(cfg.space, cfg.psi, cfg.phi, cfg.N_ladder,
                                                 int(cfg.raw["k_top"]), mats)
    top = cfg.N_ladder[-1]
    d = {"verdict": "success", "study": study.to_dict(),
         "eigenvalues": {str(N): _cvec(v) for N, v in comp.items()}}
    return d, EXIT_OK, {"eigenvalues": lambda p: spectra.write_eigenvalues_csv(comp[top], p)}


def _cmd_verify(cfg):
    tol = cfg.tolerances
    census = dynamics.fixed_point_census(cfg.domain, cfg.phi, int(cfg.raw["grid_density"]),
                                         tol["merge_radius"], tol["tol_fix"])
    d = {"census": census.to_dict()}
    if census.multiplicity_flag != "unique":
        d["verdict"] = f"fixed-point-{census.multiplicity_flag}"
        return d, EXIT_VERDICT, {}
    a, J = census.points[0], census.jacobians[0]
    mats = _matrices(cfg)
    comp = {N: spectra.eigenvalues(M.entries) for N, M in mats.items()}
    try:
        pred = spectra.predicted_set(cfg.psi, a, J, tol["modulus_floor"])
    except spectra.PredictedSetError as exc:
        d.update(verdict="predicted-set-not-enumerable", message=str(exc))
        return d, EXIT_VERDICT, {}
    rep = spectra.match_spectra(comp, pred, tol["tol_match"])
    d["spectrum"] = rep.to_dict()
    d["verdict"] = rep.verdict
    top = cfg.N_ladder[-1]
    code = EXIT_OK if rep.verdict == "supports-formula" else EXIT_VERDICT
    return d, code, {"eigenvalues": lambda p: spectra.write_eigenvalues_csv(comp[top], p)}


def _cmd_compactness(cfg):
    mats = _matrices(cfg)
    rep = operators.compactness_proxy(list(mats.values()))
    return rep.to_dict(), EXIT_OK, {}


_HANDLERS = {
    "fixed-point": _cmd_fixed_point,
    "census": _cmd_census,
    "genzhu-scan": _cmd_genzhu,
    "adjoint-check": _cmd_adjoint,
    "spectrum": _cmd_spectrum,
    "verify-conjecture": _cmd_verify,
    "compactness-proxy": _cmd_compactness,
}


def run(raw: dict, timestamp: str | None = None) -> tuple[int, list[Path]]:
    """Execute one command; returns (exit status, written files)."""
    diags = validate(raw)
    if diags:
        for d in diags:
            log.error(d)
        return EXIT_ERROR, []
    cfg = load_config(raw)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    stamp = timestamp or _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    stem = cfg.output_dir / f"{cfg.command}-{stamp}"
    try:
        body, code, csvs = _HANDLERS[cfg.command](cfg)
    except (DomainError, FixedPointError, spectra.EigenvalueError, ValueError) as exc:
        log.error("%s failed: %s", cfg.command, exc)
        return EXIT_ERROR, []
    report = {"command": cfg.command, "config": cfg.raw, **body}
    written = [stem.with_suffix(".json")]
    written[0].write_text(dumps(report))
    for name, writer in csvs.items():
        path = stem.parent / (stem.name + ("" if len(csvs) == 1 else f"-{name}") + ".csv")
        writer(path)
        written.append(path)
    return code, written


def _build_parser():
    p = argparse.ArgumentParser(prog="wcop", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="overrides the config's 'command' field")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--n-ladder", type=str, help='comma-separated, e.g. "20,40,60"')
    p.add_argument("--tol-match", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        raw = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        log.error("cannot read config %s: %s", args.config, exc)
        return EXIT_ERROR
    if not isinstance(raw, dict):
        log.error("config must be a JSON object")
        return EXIT_ERROR
    if args.command:
        raw["command"] = args.command
    if args.output_dir is not None:
        raw["output_dir"] = str(args.output_dir)
    if args.n_ladder:
        try:
            raw["N_ladder"] = [int(x) for x in args.n_ladder.split(",")]
        except ValueError:
            log.error("N_ladder: cannot parse %r", args.n_ladder)
            return EXIT_ERROR
    if args.tol_match is not None:
        raw.setdefault("tolerances", {})["tol_match"] = args.tol_match
    if args.seed is not None:
        raw["seed"] = args.seed
    code, files = run(raw)
    for f in files:
        print(f)
    return code


if __name__ == "__main__":
    sys.exit(main())
