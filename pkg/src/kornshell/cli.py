"""Command-line front end.

Configuration files use ``key = value`` lines under section headers::

    [patch]
    constructor = cylinder          # cylinder | torus_band | developable | constant
    radius = 1.0

    [run]
    h = 2^-4, 2^-5, 2^-6            # list; or h_exponents = 4..6 (powers of 1/2)
    epsilon = 1.0                   # fixed value(s), or epsilon_power = 0.75 for eps = h^alpha
    bc_mode = dirichlet_thin_edge   # or free
    seed = 0
    output = results

    [basis]
    p_t = 2
    n_theta = 48                    # optional, defaults to the resolution policy
    n_z = 12
    tol = 1e-10

    [quadrature]
    order = 5                       # Gauss nodes per spline span (solver)
    rtol = 1e-6                     # refinement gate of the Ansatz quadrature

    [ansatz]
    family = auto                   # auto | regime1 | hyperbolic | case1 | case2
    profile = exp                   # exp | poly
    m = 6

Exit status: 0 success, 1 failed check, 2 configuration error, 3 numerical
failure (non-convergence or a resolution gate).
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import re
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import geometry
from .geometry import CurvatureClass, GeometryError, ShellDomain
from .quadrature import ResolutionError
from .scaling import (FitResult, Regime, ScalingError, SweepRow, classify_regime, compare_to_theory,
                      fit_power_law, predicted_slope, regime_crossover_report, rows_from_csv,
                      rows_to_csv, theory_exponents)

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

THREADS_ENV = "KORNSHELL_THREADS"
SECTIONS = ("patch", "run", "basis", "quadrature", "ansatz")
CONSTRUCTORS = ("cylinder", "torus_band", "developable", "constant")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


class CheckFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_POWER = re.compile(r"^\s*2\s*\^\s*(-?\d+(?:\.\d+)?)\s*$")


def _number(text: str, name: str) -> float:
    m = _POWER.match(text)
    try:
        return 2.0 ** float(m.group(1)) if m else float(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse number {text!r}") from None


def _numbers(text: str, name: str) -> list:
    items = [s for s in re.split(r"[,\s]+", text.strip()) if s]
    if not items:
        raise ConfigError(f"{name}: empty list")
    return [_number(s, name) for s in items]


def _range(text: str, name: str) -> list:
    m = re.match(r"^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$", text)
    if not m:
        raise ConfigError(f"{name}: expected 'first..last'")
    a, b = int(m.group(1)), int(m.group(2))
    step = 1 if b >= a else -1
    return list(range(a, b + step, step))


def _bool(text: str, name: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{name}: expected a boolean, got {text!r}")


@dataclass
class RunConfig:
    patch: dict
    pairs: list
    bc_mode: str = "dirichlet_thin_edge"
    seed: int = 0
    output: str = "kornshell-output"
    allow_unresolved: bool = False
    record_timing: bool = True
    dump_matrices: bool = False
    eps_path: tuple = ("fixed_eps", 1.0)
    basis: dict = field(default_factory=dict)
    quadrature: dict = field(default_factory=dict)
    ansatz: dict = field(default_factory=dict)
    config_hash: str = ""

    def header_lines(self) -> list:
        return [f"config_hash={self.config_hash}", f"seed={self.seed}"]


def canonical_text(parser: configparser.ConfigParser) -> str:
    """Sorted, whitespace-normalized rendering used for the config hash."""
    out = []
    for sec in sorted(parser.sections()):
        out.append(f"[{sec}]")
        for key in sorted(parser[sec]):
            out.append(f"{key}={' '.join(parser[sec][key].split())}")
    return "\n".join(out) + "\n"


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    for sec in parser.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"[{sec}]: unknown section")
    if not parser.has_section("patch"):
        raise ConfigError("[patch]: missing section")
    if not parser.has_section("run"):
        raise ConfigError("[run]: missing section")
    patch = dict(parser["patch"])
    constructor = patch.get("constructor", "").strip()
    if constructor not in CONSTRUCTORS:
        raise ConfigError(f"patch.constructor: expected one of {CONSTRUCTORS}, got {constructor!r}")
    run = parser["run"]

    if "h" in run and "h_exponents" in run:
        raise ConfigError("run.h: give either h or h_exponents")
    if "h" in run:
        hs = _numbers(run["h"], "run.h")
    elif "h_exponents" in run:
        hs = [2.0 ** -k for k in _range(run["h_exponents"], "run.h_exponents")]
    else:
        raise ConfigError("run.h: missing thickness list")
    if any(not h > 0 for h in hs):
        raise ConfigError("run.h: thickness must be positive")

    if "epsilon" in run and "epsilon_power" in run:
        raise ConfigError("run.epsilon: give either epsilon or epsilon_power")
    pairs = []
    if "epsilon_power" in run:
        powers = _numbers(run["epsilon_power"], "run.epsilon_power")
        pairs = [(h, h ** a) for h in hs for a in powers]
        path = ("eps_power", powers[0])
        field_name = "run.epsilon_power"
    else:
        epsilons = _numbers(run.get("epsilon", "1.0"), "run.epsilon")
        pairs = [(h, e) for h in hs for e in epsilons]
        path = ("fixed_eps", epsilons[0])
        field_name = "run.epsilon"
    for h, eps in pairs:
        if eps < h * (1 - 1e-12):
            raise ConfigError(f"{field_name}: epsilon below thickness (eps={eps:g} < h={h:g})")
        if eps > 1 + 1e-12:
            raise ConfigError(f"{field_name}: epsilon above 1 (eps={eps:g})")

    bc_mode = run.get("bc_mode", "dirichlet_thin_edge").strip()
    if bc_mode not in ("dirichlet_thin_edge", "free"):
        raise ConfigError(f"run.bc_mode: expected dirichlet_thin_edge or free, got {bc_mode!r}")
    try:
        seed = int(run.get("seed", "0"))
    except ValueError:
        raise ConfigError("run.seed: expected an integer") from None

    basis = {}
    if parser.has_section("basis"):
        b = parser["basis"]
        for key in ("p_t", "n_theta", "n_z"):
            if key in b:
                try:
                    basis[key] = int(b[key])
                except ValueError:
                    raise ConfigError(f"basis.{key}: expected an integer") from None
        if "tol" in b:
            basis["tol"] = _number(b["tol"], "basis.tol")
        unknown = set(b) - {"p_t", "n_theta", "n_z", "tol"}
        if unknown:
            raise ConfigError(f"basis.{sorted(unknown)[0]}: unknown key")
    quad = {}
    if parser.has_section("quadrature"):
        q = parser["quadrature"]
        if "order" in q:
            quad["order"] = int(_number(q["order"], "quadrature.order"))
        if "rtol" in q:
            quad["rtol"] = _number(q["rtol"], "quadrature.rtol")
    ansatz = {"family": "auto", "profile": "exp", "m": 6}
    if parser.has_section("ansatz"):
        a = parser["ansatz"]
        ansatz["family"] = a.get("family", "auto").strip()
        ansatz["profile"] = a.get("profile", "exp").strip()
        if "m" in a:
            ansatz["m"] = int(_number(a["m"], "ansatz.m"))
        if ansatz["family"] not in ("auto", "regime1", "hyperbolic", "case1", "case2"):
            raise ConfigError(f"ansatz.family: unknown family {ansatz['family']!r}")
        if ansatz["profile"] not in ("exp", "poly"):
            raise ConfigError(f"ansatz.profile: unknown profile {ansatz['profile']!r}")

    cfg = RunConfig(
        patch=patch, pairs=pairs, bc_mode=bc_mode, seed=seed,
        output=run.get("output", "kornshell-output").strip(),
        allow_unresolved=_bool(run.get("allow_unresolved", "false"), "run.allow_unresolved"),
        record_timing=_bool(run.get("record_timing", "true"), "run.record_timing"),
        dump_matrices=_bool(run.get("dump_matrices", "false"), "run.dump_matrices"),
        eps_path=path, basis=basis, quadrature=quad, ansatz=ansatz,
        config_hash=hashlib.sha256(canonical_text(parser).encode()).hexdigest()[:16],
    )
    # fail early on bad patch parameters
    build_patch(cfg.patch, pairs[0][1])
    return cfg


def _poly(text: str, name: str):
    coef = _numbers(text, name)
    return coef[0] if len(coef) == 1 else tuple(coef)


def build_patch(spec: dict, eps: float):
    """Construct the configured patch at width ``eps``."""
    kind = spec["constructor"].strip()
    params = {k: v for k, v in spec.items() if k != "constructor"}

    def num(key, default):
        return _number(params.pop(key), f"patch.{key}") if key in params else default

    try:
        if kind == "cylinder":
            patch = geometry.make_cylinder(num("radius", 1.0), eps)
        elif kind == "torus_band":
            band = params.pop("band", "outer").strip()
            patch = geometry.make_torus_band(num("major", 2.0), num("minor", 1.0), band, eps,
                                             num("span", math.pi / 2))
        elif kind == "developable":
            polys = {key: _poly(params.pop(key), f"patch.{key}") for key in ("a", "b", "c", "B") if key in params}
            patch = geometry.make_developable(polys.get("a", 0.0), polys.get("b", 1.0), polys.get("c", 1.0),
                                              polys.get("B", (0.0, 1.0)), eps, num("z_lower", 0.0))
        else:
            patch = geometry.make_constant_patch(num("a_theta", 1.0), num("a_z", 1.0), num("k_theta", 0.0),
                                                 num("k_z", 0.0), eps)
    except GeometryError as exc:
        raise ConfigError(f"patch.constructor: {kind} rejected parameters ({exc})") from None
    if params:
        raise ConfigError(f"patch.{sorted(params)[0]}: unknown parameter for {kind}")
    return patch


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}: expected an integer, got {raw!r}") from None


def _profile(cfg: RunConfig):
    from .ansatz import BumpProfile

    if cfg.ansatz["profile"] == "poly":
        return BumpProfile("poly", m=cfg.ansatz["m"])
    return BumpProfile()


def _ansatz_field(cfg: RunConfig, shell):
    from . import ansatz

    family = cfg.ansatz["family"]
    profile = _profile(cfg)
    if family == "auto":
        cls = shell.patch.curvature_class
        if classify_regime(shell.h, shell.epsilon) is Regime.REGIME1 or cls is CurvatureClass.ELLIPTIC:
            family = "regime1"
        elif cls is CurvatureClass.HYPERBOLIC:
            family = "hyperbolic"
        elif shell.patch.developable is not None:
            try:
                ansatz.case1_factorization(shell.patch.developable)
                family = "case1"
            except ansatz.FactorizationError:
                family = "case2"
        else:
            raise ConfigError("ansatz.family: no default Ansatz for this patch; set it explicitly")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ansatz.RegimeWarning)
        if family == "regime1":
            return family, ansatz.regime1_field(shell, profile)
        if family == "hyperbolic":
            return family, ansatz.hyperbolic_field(shell, profile)
        if family == "case1":
            return family, ansatz.developable_field_case1(shell, profile)
        return family, ansatz.developable_field_case2(shell, profile)


def _ansatz_row(cfg: RunConfig, h: float, eps: float) -> SweepRow:
    from .ansatz import ansatz_report

    start = time.perf_counter()
    shell = ShellDomain(build_patch(cfg.patch, eps), h)
    family, fld = _ansatz_field(cfg, shell)
    rep = ansatz_report(shell, fld, rtol=cfg.quadrature.get("rtol", 1e-6))
    wall = time.perf_counter() - start if cfg.record_timing else 0.0
    return SweepRow(h, eps, rep.C1_bound, "ansatz", cfg.bc_mode, shell.patch.name,
                    classify_regime(h, eps).value, rep.refinement_change, wall,
                    meta={"family": family, "ratio": rep.ratio, "panels": list(rep.grid.panels)})


def _estimator(cfg: RunConfig):
    from .korn_solver import KornConstantEstimator

    b = cfg.basis
    return KornConstantEstimator(p_t=b.get("p_t", 2), n_theta=b.get("n_theta"), n_z=b.get("n_z"),
                                 bc_mode=cfg.bc_mode, tol=b.get("tol", 1e-10), seed=cfg.seed,
                                 allow_unresolved=cfg.allow_unresolved,
                                 quad_order=cfg.quadrature.get("order", 5))


def _solver_row(cfg: RunConfig, h: float, eps: float):
    start = time.perf_counter()
    shell = ShellDomain(build_patch(cfg.patch, eps), h)
    est = _estimator(cfg).fit(shell)
    wall = time.perf_counter() - start if cfg.record_timing else 0.0
    row = SweepRow(h, eps, est.C1_, "solver", cfg.bc_mode, shell.patch.name, classify_regime(h, eps).value,
                   est.estimate_.residual, wall, meta=est.forms_.metadata())
    return row, est.estimate_.converged


def _run_all(fn, cfg: RunConfig, pairs) -> list:
    """Apply ``fn(cfg, h, eps)`` over ``pairs``; results come back in input order."""
    workers = min(_threads(), len(pairs))
    if workers <= 1:
        return [fn(cfg, h, e) for h, e in pairs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, cfg, h, e) for h, e in pairs]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------

def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def emit_plot(rows, fit: Optional[FitResult], theory_slope: Optional[float], path, title: str = "",
              provenance: str = "", ylabel: str = "C1") -> Path:
    """Deterministic log-log SVG of C1 against 1/h with fit and dashed theory guide."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = list(rows)
    if len(rows) < 2:
        raise ValueError("a plot needs at least two rows")
    inv_h = np.array([1.0 / r.h for r in rows])
    c1 = np.array([r.C1 for r in rows])
    order = np.argsort(inv_h)
    inv_h, c1 = inv_h[order], c1[order]
    with matplotlib.rc_context({"svg.hashsalt": provenance or "kornshell", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        ax.loglog(inv_h, c1, "o", label="data")
        if fit is not None:
            half = 0.5 * (fit.slope_ci[1] - fit.slope_ci[0])
            half_txt = f"{half:.3f}" if math.isfinite(half) else "n/a"
            ax.loglog(inv_h, np.exp(fit.intercept) * inv_h ** fit.slope, "-",
                      label=f"fit slope {fit.slope:.3f} ± {half_txt}")
        if theory_slope is not None:
            anchor = np.exp(np.mean(np.log(c1)) - theory_slope * np.mean(np.log(inv_h)))
            ax.loglog(inv_h, anchor * inv_h ** theory_slope, "--", color="gray",
                      label=f"theory slope {theory_slope:g}")
        ax.set_xlabel("1/h")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        fig.tight_layout()
        path = Path(path)
        try:
            fig.savefig(path, format="svg",
                        metadata={"Date": None, "Description": provenance or None})
        except OSError as exc:
            raise OSError(f"cannot write plot {path}: {exc}") from exc
        finally:
            plt.close(fig)
    return path


def _fit_rows(rows, path):
    try:
        return fit_power_law(rows, path, min_points=2)
    except ScalingError:
        return None


def _theory_for(rows, patch, path):
    regimes = {classify_regime(r.h, r.epsilon) for r in rows}
    if len(regimes) != 1 or patch.curvature_class is CurvatureClass.MIXED:
        return None
    exps = theory_exponents(patch.curvature_class, regimes.pop())
    return predicted_slope(exps, path[1] if path[0] == "eps_power" else None)


def _theory_report(rows, patch, path) -> dict:
    report = {}
    try:
        report["theory"] = compare_to_theory(rows, patch.curvature_class, path, min_points=2)
    except (ScalingError, ValueError) as exc:
        report["theory_error"] = str(exc)
    try:
        report["crossover"] = regime_crossover_report(rows).to_dict()
    except (ScalingError, ValueError) as exc:
        report["crossover_error"] = str(exc)
    return report


def _write_sweep(cfg: RunConfig, rows, out: Path, stem: str, patch) -> dict:
    csv_path = out / f"{stem}.csv"
    csv_path.write_text(rows_to_csv(rows, cfg.header_lines()))
    on_path = [r for r in rows if _matches_path(r, cfg.eps_path)]
    fit = _fit_rows(on_path, cfg.eps_path) if len(on_path) >= 2 else None
    theory = _theory_for(on_path, patch, cfg.eps_path) if on_path else None
    svg_path = out / f"{stem}.svg"
    if len(rows) >= 2:
        emit_plot(on_path if len(on_path) >= 2 else rows, fit, theory, svg_path,
                  title=f"{patch.name} ({stem})", provenance=" ".join(cfg.header_lines()),
                  ylabel="C1" if stem == "sweep" else "1 / ratio")
    return {"csv": str(csv_path), "svg": str(svg_path) if len(rows) >= 2 else None,
            "fit": fit.to_dict() if fit else None, "theory_slope": theory}


def _matches_path(row, path) -> bool:
    kind, value = path
    if kind == "fixed_eps":
        return abs(row.epsilon - value) <= 1e-9 * max(1.0, value)
    return abs(math.log(row.epsilon) - value * math.log(row.h)) <= 1e-9 * abs(math.log(row.h))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig, out: Path) -> int:
    from .identities import run_identity_suite

    h, eps = cfg.pairs[0]
    shell = ShellDomain(build_patch(cfg.patch, eps), h)
    records = run_identity_suite(shell, n_fields=10, seed=cfg.seed)
    payload = {"config_hash": cfg.config_hash, "seed": cfg.seed, "patch": shell.patch.name, "h": h,
               "epsilon": eps, "checks": [r.to_dict() for r in records],
               "all_pass": all(r.passed for r in records)}
    write_json(out / "verify.json", payload)
    return EXIT_OK if payload["all_pass"] else EXIT_CHECK


def cmd_ansatz(cfg: RunConfig, out: Path) -> int:
    rows = _run_all(_ansatz_row, cfg, cfg.pairs)
    patch = build_patch(cfg.patch, cfg.pairs[0][1])
    summary = _write_sweep(cfg, rows, out, "ansatz", patch)
    summary.update(config_hash=cfg.config_hash, seed=cfg.seed,
                   families=sorted({r.meta["family"] for r in rows}))
    write_json(out / "ansatz.json", summary)
    return EXIT_OK


def cmd_korn(cfg: RunConfig, out: Path) -> int:
    from .korn_solver import dump_triplets

    h, eps = cfg.pairs[0]
    shell = ShellDomain(build_patch(cfg.patch, eps), h)
    est = _estimator(cfg).fit(shell)
    payload = {"config_hash": cfg.config_hash, "seed": cfg.seed, "patch": shell.patch.name,
               "regime": classify_regime(h, eps).value, "estimate": est.estimate_.as_dict(),
               "forms": est.forms_.metadata()}
    if cfg.dump_matrices:
        payload["dumps"] = {}
        for name in ("S", "G"):
            target = out / f"matrix_{name}.txt"
            payload["dumps"][name] = {"path": str(target),
                                      "entries": dump_triplets(getattr(est.forms_, name), target)}
    write_json(out / "korn.json", payload)
    return EXIT_OK if est.estimate_.converged else EXIT_NUMERIC


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    results = _run_all(_solver_row, cfg, cfg.pairs)
    rows = [r for r, _ in results]
    patch = build_patch(cfg.patch, cfg.pairs[0][1])
    summary = _write_sweep(cfg, rows, out, "sweep", patch)
    summary.update(_theory_report(rows, patch, cfg.eps_path))
    summary.update(config_hash=cfg.config_hash, seed=cfg.seed,
                   forms=[r.meta for r in rows], unconverged=[i for i, (_, ok) in enumerate(results) if not ok])
    write_json(out / "sweep_report.json", summary)
    return EXIT_OK if all(ok for _, ok in results) else EXIT_NUMERIC


def cmd_report(cfg: RunConfig, out: Path, csv_path: Optional[Path] = None) -> int:
    source = csv_path or out / "sweep.csv"
    if not source.exists():
        raise ConfigError(f"run.output: no sweep CSV at {source}")
    rows = rows_from_csv(source.read_text())
    patch = build_patch(cfg.patch, rows[0].epsilon if rows else cfg.pairs[0][1])
    payload = {"config_hash": cfg.config_hash, "seed": cfg.seed, "source": str(source), "n_rows": len(rows)}
    fit = _fit_rows([r for r in rows if _matches_path(r, cfg.eps_path)], cfg.eps_path)
    payload["fit"] = fit.to_dict() if fit else None
    payload.update(_theory_report(rows, patch, cfg.eps_path))
    write_json(out / "report.json", payload)
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "ansatz": cmd_ansatz, "korn": cmd_korn, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kornshell", description="Korn constants of thin shallow shells")
    parser.add_argument("command", choices=sorted(list(COMMANDS) + ["report"]))
    parser.add_argument("config", type=Path, help="configuration file")
    parser.add_argument("--output", type=Path, help="override run.output")
    parser.add_argument("--csv", type=Path, help="sweep CSV for the report command")
    parser.add_argument("--allow-unresolved", action="store_true",
                        help="run bases below the resolution policy instead of failing")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config} ({exc.strerror})") from None
        cfg = parse_config(text)
        if args.allow_unresolved:
            cfg.allow_unresolved = True
        out = args.output or Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "report":
            return cmd_report(cfg, out, args.csv)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"kornshell: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"kornshell: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResolutionError as exc:
        print(f"kornshell: resolution gate: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (np.linalg.LinAlgError, ArithmeticError, RuntimeError) as exc:
        print(f"kornshell: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
