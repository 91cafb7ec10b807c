"""Command-line interface.

Every run writes a JSON report (to ``--json`` or stdout) that embeds the
fully resolved configuration; ``--csv`` and ``--svg`` add a columnar field
dump and a heatmap where the command produces a field.

Parameters come from three layers, later ones winning: built-in defaults,
a flat ``key = value`` config file (``--config``) whose keys carry a section
prefix (``solve-gauss.radius = 0.9``, ``output.scale = log``,
``run.seed = 3``), and command-line flags.

Exit codes: 0 success, 2 contract violation, 3 numerical non-convergence,
4 usage error.  Failures print one line ``hypermetric-error tag=<tag>
type=<exception> message=<text>`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis_spaces import (a12_norm_sq, example33_k, green_energy_sup, h2_norm_sq_boundary,
                              kjgamma, littlewood_paley_check, solvability_integral)
from .blaschke import (FiniteBlaschke, MultiplicitySequence, cluster_match_error, critical_points,
                       degree_by_winding, format_complex, from_critical_points, from_zeros,
                       parse_complex)
from .disk_core import GridField, PolarGrid
from .errors import ContractViolation, NonConvergenceError
from .gauss_solver import (DirichletProblem, blaschke_squared_k, constant_k, default_schedule,
                           exhaustion_run, pde_residual, solve_dirichlet_fd,
                           solve_dirichlet_green)
from .maximal import SweepConfig, boundary_probe, perron_sweep, schwarz_pick_refinement
from .metrics import ahlfors_check, developing_density, hyperbolic, pullback, sample_points, sk_check

logger = logging.getLogger("hypermetric")

EXIT_OK, EXIT_CONTRACT, EXIT_NONCONVERGENCE, EXIT_USAGE = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parameter tables
# ---------------------------------------------------------------------------


def _clist(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    return [parse_complex(t) for t in text.split(",")]


def _complex(text: str) -> complex:
    return parse_complex(text)


K_PARAMS = {
    "k": ("constant", str, "weight: constant, kjgamma, example33, blaschke-squared"),
    "c": (4.0, float, "value of the constant weight"),
    "j": (1, int, "index j of k_j^gamma"),
    "gamma": (2.0, float, "exponent gamma of k_j^gamma"),
    "alpha": (1.5, float, "exponent alpha of 4/|z-1|^(2 alpha)"),
    "k-zeros": ("", _clist, "zeros of B for the weight 4|B|^2"),
}

COMMANDS = {
    "blaschke-from-zeros": {
        "zeros": ("", _clist, "comma separated zeros a+bj (repeat for multiplicity)"),
        "rotation": ("1+0j", _complex, "unimodular rotation"),
    },
    "blaschke-from-critical": {
        "points": ("", _clist, "comma separated critical points (repeat for multiplicity)"),
        "tol": (1e-13, float, "Newton tolerance"),
    },
    "solve-gauss": dict(K_PARAMS, **{
        "boundary": ("hyperbolic", str, "constant boundary value or 'hyperbolic' for -log(1-|z|^2)"),
        "center": ("0+0j", _complex, "disk center"),
        "radius": (0.9, float, "disk radius"),
        "n-r": (128, int, "radial intervals"),
        "n-theta": (128, int, "angles"),
        "method": ("fd", str, "fd (Newton) or green (Picard)"),
        "tol": (1e-10, float, "solver tolerance"),
    }),
    "exhaustion": dict(K_PARAMS, **{
        "boundary": (0.0, float, "boundary constant c"),
        "n-radial": (12, int, "exhaustion disks"),
        "method": ("auto", str, "auto, radial or grid"),
    }),
    "check-solvability": dict(K_PARAMS, **{
        "samples": (8, int, "points for the Green energy sup"),
    }),
    "verify-identities": {
        "suite": ("littlewood-paley", str, "littlewood-paley, bergman or hardy"),
        "degree": (8, int, "maximal polynomial degree"),
        "count": (10, int, "random functions"),
    },
    "maximal-metric": {
        "points": ("", _clist, "prescribed zeros (repeat for multiplicity)"),
        "n-r": (128, int, "radial intervals of the global grid"),
        "n-theta": (256, int, "angles of the global grid"),
        "cover-radius": (0.15, float, "radius of the cover disks"),
        "overlap": (0.5, float, "overlap fraction of neighbouring cover disks"),
        "rounds": (400, int, "maximal sweep rounds"),
        "tol": (1e-8, float, "stop when the round update is below tol"),
    },
    "boundary-probe": {
        "zeros": ("", _clist, "zeros of the Blaschke product"),
        "critical": ("", _clist, "critical points (used when zeros is empty)"),
        "zeta": ("1+0j", _complex, "boundary point"),
        "delta": (math.pi / 4, float, "Stolz aperture"),
        "angle": (math.pi, float, "approach angle"),
        "count": (17, int, "samples"),
        "depth": (1e-5, float, "final distance to zeta"),
    },
    "schwarz-pick": {
        "f-zeros": ("0,0,0", _clist, "zeros of the Blaschke product f"),
        "subset": ("0", _clist, "subsequence of the critical set of f"),
        "samples": (1000, int, "sample points"),
    },
}

OUTPUT_KEYS = {"json": str, "csv": str, "svg": str, "scale": str}
RUN_KEYS = {"seed": int}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypermetric",
                     description="Conformal pseudometrics of curvature -4, the Gauss curvature "
                                 "equation and finite Blaschke products on the unit disk.",
                     epilog="Exit codes: 0 ok, 2 contract violation, 3 non-convergence, 4 usage.")
    parser.add_argument("--version", action="version", version=f"hypermetric {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for name, table in COMMANDS.items():
        p = sub.add_parser(name, help=name.replace("-", " "))
        for key, (default, _, help_text) in table.items():
            p.add_argument(f"--{key}", dest=key, default=None, help=f"{help_text} (default {default})")
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--json", default=None, help="JSON report path (default stdout)")
        p.add_argument("--csv", default=None, help="columnar CSV output path")
        p.add_argument("--svg", default=None, help="SVG heatmap path")
        p.add_argument("--scale", default=None, choices=["linear", "log"], help="heatmap color scale")
        p.add_argument("--seed", default=None, help="seed for randomized samples (default 0)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def read_config(path) -> dict:
    """Parse ``section.key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            raise UsageError(f"{path}:{n}: key {key!r} lacks a section prefix")
        out[key] = value
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags; unknown keys are rejected."""
    cmd = args.command
    table = COMMANDS[cmd]
    raw = {"params": {}, "output": {}, "run": {}}
    if args.config:
        for key, value in read_config(args.config).items():
            section, name = key.split(".", 1)
            if section == cmd and name in table:
                raw["params"][name] = value
            elif section == "output" and name in OUTPUT_KEYS:
                raw["output"][name] = value
            elif section == "run" and name in RUN_KEYS:
                raw["run"][name] = value
            elif section in COMMANDS and section != cmd:
                continue  # settings for other commands may share one file
            else:
                raise UsageError(f"unknown config key {key!r}")
    for name in table:
        v = getattr(args, name.replace("-", "_"), None)
        if v is None:
            v = vars(args).get(name)
        if v is not None:
            raw["params"][name] = v
    for name in OUTPUT_KEYS:
        if getattr(args, name) is not None:
            raw["output"][name] = getattr(args, name)
    if args.seed is not None:
        raw["run"]["seed"] = args.seed

    params = {}
    for name, (default, conv, _) in table.items():
        value = raw["params"].get(name, default)
        try:
            params[name] = conv(value) if isinstance(value, str) else value
        except (ValueError, ContractViolation) as exc:
            raise UsageError(f"bad value for {name}: {value!r} ({exc})") from exc
    try:
        seed = int(raw["run"].get("seed", 0))
    except ValueError as exc:
        raise UsageError(f"bad seed {raw['run'].get('seed')!r}") from exc
    output = {k: raw["output"].get(k) for k in OUTPUT_KEYS}
    output["scale"] = output["scale"] or "linear"
    if output["scale"] not in ("linear", "log"):
        raise UsageError("output.scale must be linear or log")
    return {"command": cmd, "params": params, "seed": seed, "output": output}


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------


def clean(obj):
    """Recursively convert to JSON-safe values: complex numbers become
    ``"a+bj"`` strings and non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return format_complex(complex(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, MultiplicitySequence):
        return clean(obj.to_json())
    return str(obj)


def dumps(report: dict) -> str:
    return json.dumps(clean(report), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def build_k(p: dict):
    name = p["k"]
    if name == "constant":
        return constant_k(p["c"])
    if name == "kjgamma":
        return kjgamma(p["j"], p["gamma"])
    if name == "example33":
        return example33_k(p["alpha"])
    if name == "blaschke-squared":
        return blaschke_squared_k(from_zeros(p["k-zeros"]))
    raise UsageError(f"unknown weight {name!r}")


def _blaschke_json(B: FiniteBlaschke) -> dict:
    crit = critical_points(B)
    return {"degree": B.degree, "rotation": B.rotation, "zeros": B.zeros.to_json(),
            "critical_points": crit.to_json(),
            "degree_by_winding": degree_by_winding(B, 0.999) if B.degree else 0}


def _density_field(lam, n: int = 64, r_max: float = 0.95) -> GridField:
    grid = PolarGrid.uniform(n, n, r_max=r_max)
    return GridField(grid, np.asarray(lam(grid.points), dtype=float))


def cmd_blaschke_from_zeros(p, seed):
    B = from_zeros(p["zeros"], p["rotation"])
    return _blaschke_json(B), _density_field(developing_density(B))


def cmd_blaschke_from_critical(p, seed):
    C = MultiplicitySequence.from_points(p["points"])
    F = from_critical_points(C, tol=p["tol"])
    out = _blaschke_json(F)
    out["residual"] = cluster_match_error(critical_points(F), C)
    return out, _density_field(developing_density(F))


def cmd_solve_gauss(p, seed):
    k = build_k(p)
    b = p["boundary"]
    if b == "hyperbolic":
        boundary = lambda z: -np.log1p(-np.abs(z) ** 2)  # noqa: E731
    else:
        try:
            boundary = float(b)
        except ValueError as exc:
            raise UsageError(f"boundary must be a number or 'hyperbolic', got {b!r}") from exc
    prob = DirichletProblem(k, boundary, p["center"], p["radius"])
    if p["method"] == "fd":
        sol = solve_dirichlet_fd(prob, p["n-r"], p["n-theta"], p["tol"])
    elif p["method"] == "green":
        sol = solve_dirichlet_green(prob, p["n-r"], p["n-theta"], p["tol"])
    else:
        raise UsageError("method must be fd or green")
    out = {"report": sol.report.to_json(), "center_value": sol.center_value,
           "pde_residual": pde_residual(sol) if p["method"] == "fd" else None,
           "k": k.to_json()}
    return out, sol.u


def cmd_exhaustion(p, seed):
    k = build_k(p)
    n = p["n-radial"]
    if p["method"] == "grid" or not k.radial:
        # nested polar grids resolve r_n = 1 - 2^-n up to n = 8
        res = exhaustion_run(k, p["boundary"], 1.0 - 2.0 ** -np.arange(1, min(n, 8) + 1),
                             method=p["method"])
    else:
        res = exhaustion_run(k, p["boundary"], depth_schedule=default_schedule(n),
                             method=p["method"])
    out = res.to_json()
    out["k"] = k.to_json()
    return out, None


def cmd_check_solvability(p, seed):
    k = build_k(p)
    rng = np.random.default_rng(seed)
    n = max(1, p["samples"])
    zs = np.concatenate([[0j], 0.9 * np.sqrt(rng.random(n - 1)) * np.exp(2j * np.pi * rng.random(n - 1))])
    return {"k": k.to_json(), "solvability": solvability_integral(k).to_json(),
            "green_energy": green_energy_sup(k, zs).to_json()}, None


def _random_polys(rng, degree, count):
    out = []
    for _ in range(count):
        d = int(rng.integers(1, degree + 1))
        out.append(rng.normal(size=d + 1) + 1j * rng.normal(size=d + 1))
    return out


def cmd_verify_identities(p, seed):
    rng = np.random.default_rng(seed)
    suite = p["suite"]
    rows = []
    if suite == "littlewood-paley":
        cases = [("z", [0, 1]), ("z^2", [0, 0, 1])]
        cases += [(f"poly{i}", c) for i, c in enumerate(_random_polys(rng, p["degree"], p["count"]))]
        for i in range(p["count"]):
            deg = int(rng.integers(1, min(4, p["degree"]) + 1))
            zeros = 0.9 * np.sqrt(rng.random(deg)) * np.exp(2j * np.pi * rng.random(deg))
            cases.append((f"blaschke{i}", from_zeros(zeros)))
        for name, phi in cases:
            r = littlewood_paley_check(phi)
            rows.append({"case": name, **r})
        gaps = [r["gap"] for r in rows]
    elif suite == "bergman":
        # iint (1-|z|^2)|phi'|^2 = pi sum n |a_n|^2/(n+1)
        for i, c in enumerate(_random_polys(rng, p["degree"], p["count"])):
            P = np.polynomial.Polynomial(c)
            exact = np.pi * sum(n * abs(c[n]) ** 2 / (n + 1) for n in range(1, len(c)))
            val = a12_norm_sq(P.deriv()).value
            rows.append({"case": f"poly{i}", "value": val, "exact": exact, "gap": abs(val - exact)})
        gaps = [r["gap"] / (1 + r["exact"]) for r in rows]
    elif suite == "hardy":
        for i, c in enumerate(_random_polys(rng, p["degree"], p["count"])):
            P = np.polynomial.Polynomial(c)
            exact = float(np.sum(np.abs(c) ** 2))
            val = h2_norm_sq_boundary(P, [0.5, 0.9, 1.0]).value
            rows.append({"case": f"poly{i}", "value": val, "exact": exact, "gap": abs(val - exact)})
        gaps = [r["gap"] / (1 + r["exact"]) for r in rows]
    else:
        raise UsageError("suite must be littlewood-paley, bergman or hardy")
    return {"suite": suite, "cases": rows, "max_gap": max(gaps), "passed": max(gaps) <= 1e-6}, None


def cmd_maximal_metric(p, seed):
    C = MultiplicitySequence.from_points(p["points"])
    cfg = SweepConfig.hexagonal(C, radius=p["cover-radius"], overlap=p["overlap"],
                                rounds=p["rounds"], tol=p["tol"], n_r=p["n-r"], n_theta=p["n-theta"])
    lam, rep = perron_sweep(C, cfg)
    F = from_critical_points(C)
    ref = pullback(hyperbolic(), F)
    z = sample_points(1000, seed, 0.9, C.points, 1e-3)
    rel = float(np.max(np.abs(lam(z) / ref(z) - 1.0)))
    state = rep.state
    out = {"sweep": rep.to_json(), "config": cfg.to_json(), "maximal_function": F.to_json(),
           "oracle_max_relative_error": rel, "sk_check": sk_check(lam, seed=seed).to_json(),
           "ahlfors_check": ahlfors_check(lam, seed=seed)}
    return out, GridField(state.grid, state.values())


def _probe_map(p):
    if p["zeros"]:
        return from_zeros(p["zeros"])
    if p["critical"]:
        return from_critical_points(p["critical"])
    raise UsageError("boundary-probe needs --zeros or --critical")


def cmd_boundary_probe(p, seed):
    rep = boundary_probe(_probe_map(p), p["zeta"], p["delta"], p["count"], p["depth"], p["angle"])
    return rep.to_json(), None


def cmd_schwarz_pick(p, seed):
    f = from_zeros(p["f-zeros"])
    rep = schwarz_pick_refinement(f, p["subset"], budget=p["samples"], seed=seed)
    return rep.to_json(), None


HANDLERS = {
    "blaschke-from-zeros": cmd_blaschke_from_zeros,
    "blaschke-from-critical": cmd_blaschke_from_critical,
    "solve-gauss": cmd_solve_gauss,
    "exhaustion": cmd_exhaustion,
    "check-solvability": cmd_check_solvability,
    "verify-identities": cmd_verify_identities,
    "maximal-metric": cmd_maximal_metric,
    "boundary-probe": cmd_boundary_probe,
    "schwarz-pick": cmd_schwarz_pick,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _emit(report: dict, path):
    text = dumps(report)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _fail(tag: str, exc: BaseException, code: int, config, json_path) -> int:
    msg = " ".join(str(exc).split())
    sys.stderr.write(f"hypermetric-error tag={tag} type={type(exc).__name__} message={msg}\n")
    if config is not None:
        report = {"tool": "hypermetric", "version": __version__, "command": config["command"],
                  "config": config, "status": "error",
                  "error": {"tag": tag, "type": type(exc).__name__, "message": msg}}
        try:
            _emit(report, json_path)
        except OSError:
            pass
    return code


def run(argv=None) -> int:
    """Execute one command; returns the exit code."""
    config = None
    json_path = None
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        config = resolve(args)
        json_path = config["output"]["json"]
        result, fld = HANDLERS[config["command"]](config["params"], config["seed"])
        out = config["output"]
        if (out["csv"] or out["svg"]) and fld is None:
            if config["command"] == "exhaustion" and out["csv"]:
                _exhaustion_csv(result, out["csv"])
            else:
                raise UsageError(f"{config['command']} produces no field for --csv/--svg")
        else:
            if out["csv"]:
                from .plotting import write_field_csv
                write_field_csv(fld, out["csv"])
            if out["svg"]:
                from .plotting import render_heatmap
                render_heatmap(fld, out["svg"], out["scale"], title=config["command"])
        report = {"tool": "hypermetric", "version": __version__, "command": config["command"],
                  "config": config, "status": "ok", "result": result}
        _emit(report, json_path)
        return EXIT_OK
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE, config, json_path)
    except ContractViolation as exc:
        return _fail("contract", exc, EXIT_CONTRACT, config, json_path)
    except NonConvergenceError as exc:
        return _fail("nonconvergence", exc, EXIT_NONCONVERGENCE, config, json_path)
    except OSError as exc:
        return _fail("io", exc, EXIT_CONTRACT, config, json_path)


def _exhaustion_csv(result: dict, path):
    lines = ["n,radius,center_value"]
    for n, (r, u) in enumerate(zip(result["radii"], result["center_values"])):
        lines.append(f"{n},{float(r)!r},{float(u)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
