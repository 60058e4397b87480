"""Command line interface.

Every command that writes files also writes ``manifest.json``; ``minvset replay``
re-runs a manifest and reproduces its CSV and JSON outputs byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from ._accel import BACKEND
from .bipoly import BiPoly
from .correspondence import (
    AffineMap,
    detect_affine_ifs,
    family_operator,
    one_point_sets,
    operator_from_affine_ifs,
    phi,
    psi,
)
from .dynamics import (
    IterationConfig,
    Mode,
    Status,
    convergence_study,
    existence_check,
    minimal_invariant_set,
)
from .errors import MinvsetError, ParseError, PreconditionError
from .julia import cross_validate_m1, rational_from_operator
from .operator import (
    DiffOperator,
    fuchs_index,
    fundamental_polygon,
    is_exactly_solvable,
    is_nondegenerate,
    symbol_eigenvalues,
)
from .poly import ComplexPoly
from .render import parse_size, save_png

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNBOUNDED = 2
EXIT_EMPTY = 3
EXIT_MAX_ITER = 4
EXIT_PARSE = 5
EXIT_PRECONDITION = 6

STATUS_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.UNBOUNDED: EXIT_UNBOUNDED,
    Status.EMPTY: EXIT_EMPTY,
    Status.MAX_ITER: EXIT_MAX_ITER,
}

DEFAULT_OUT = "minvset_out"


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def _num(value, where: str) -> complex:
    """A JSON number or ``[re, im]`` pair as a complex number."""
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        z = complex(value)
    elif isinstance(value, str):
        try:
            z = complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ParseError(f"{where}: cannot read {value!r} as a complex number") from None
    elif isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        z = complex(value[0], value[1])
    else:
        raise ParseError(f"{where}: expected a number or a [re, im] pair")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParseError(f"{where}: coefficient is not finite")
    return z


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _load_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc.msg}", exc.lineno, exc.colno) from None


def operator_from_json(data, source: str = "spec") -> DiffOperator:
    if not isinstance(data, dict) or "coeffs" not in data:
        raise ParseError(f'{source}: expected an object with a "coeffs" list')
    raw = data["coeffs"]
    if not isinstance(raw, list):
        raise ParseError(f'{source}: "coeffs" must be a list')
    polys = []
    for j, q in enumerate(raw):
        if not isinstance(q, list):
            raise ParseError(f"{source}: coefficient Q_{j} must be a list")
        polys.append(ComplexPoly([_num(c, f"{source}: Q_{j}[{i}]") for i, c in enumerate(q)]))
    T = DiffOperator(polys)
    if T.is_zero():
        raise ParseError(f"{source}: every coefficient is zero")
    return T


def operator_to_json(T: DiffOperator, name: Optional[str] = None) -> dict:
    out: dict = {"coeffs": [[_pair(c) for c in q.coeffs] for q in T.coeffs]}
    if name:
        out["name"] = name
    return out


def read_operator(path: str) -> tuple[DiffOperator, dict]:
    text = sys.stdin.read() if path == "-" else _read_text(path)
    data = _load_json(text, path)
    T = operator_from_json(data, path)
    return T, operator_to_json(T, data.get("name"))


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def bipoly_to_json(B: BiPoly) -> list:
    """``out[i][j]`` is the ``[re, im]`` coefficient of ``x^i z^j``."""
    return [[_pair(c) for c in row] for row in B.coeffs]


def bipoly_from_json(data, source: str = "matrix") -> BiPoly:
    if isinstance(data, dict):
        data = data.get("coeffs")
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise ParseError(f"{source}: expected a nested list of coefficients")
    width = max((len(r) for r in data), default=0)
    c = np.zeros((len(data), width), dtype=complex)
    for i, row in enumerate(data):
        for j, v in enumerate(row):
            c[i, j] = _num(v, f"{source}[{i}][{j}]")
    return BiPoly(c)


def write_csv(path: Path, points: np.ndarray) -> None:
    lines = ["re,im"] + [f"{z.real:.17g},{z.imag:.17g}" for z in points]
    path.write_text("\n".join(lines) + "\n")


def read_csv(path) -> np.ndarray:
    rows = Path(path).read_text().splitlines()[1:]
    return np.array([complex(*map(float, r.split(","))) for r in rows if r], dtype=complex)


def _clean(obj):
    """JSON-safe copy: complex as ``[re, im]``, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class Outcome:
    report: dict
    code: int = EXIT_OK


def _config(opts: dict) -> IterationConfig:
    cfg = IterationConfig()
    fields = {
        "eps": "eps",
        "rmax": "r_max",
        "max_iter": "max_iter",
        "seed": "rng_seed",
        "samples": "tau_samples",
    }
    changes = {fields[k]: v for k, v in opts.items() if k in fields and v is not None}
    return dataclasses.replace(cfg, **changes)


def _png(opts: dict, cloud, path: Path) -> None:
    if opts.get("png"):
        w, h = parse_size(opts["png"])
        save_png(cloud, path, w, h)


def run_classify(T: DiffOperator, opts: dict, cfg: IterationConfig, out: Optional[Path]) -> Outcome:
    n = opts.get("n") or max(T.order, 1)
    rep: dict = {
        "fuchs": fuchs_index(T),
        "exactly_solvable": is_exactly_solvable(T),
        "nondegenerate": is_nondegenerate(T),
        "order": T.order,
        "n": n,
    }
    if rep["exactly_solvable"]:
        rep["spectrum"] = symbol_eigenvalues(T, n).lambdas
        ex = existence_check(T, n)
        rep["existence"] = {
            "unique_dominant": ex.unique_dominant,
            "dominant_index": ex.dominant_index,
            "one_point_free": ex.one_point_free,
            "unbounded_hint": ex.unbounded_hint,
            "infinite_hint": ex.infinite_hint,
            "hypotheses_hold": ex.theorem_hypotheses_hold,
        }
    try:
        rep["fundamental_polygon"] = fundamental_polygon(T).vertices
    except PreconditionError:
        rep["fundamental_polygon"] = None
    return Outcome(rep)


def run_iterate(T: DiffOperator, opts: dict, cfg: IterationConfig, out: Path) -> Outcome:
    run = minimal_invariant_set(T, opts["n"], Mode(opts["mode"]), cfg)
    write_csv(out / "cloud.csv", run.cloud.points)
    _png(opts, run.cloud, out / "cloud.png")
    return Outcome(run.summary(), STATUS_EXIT[run.status])


def run_julia(T: DiffOperator, opts: dict, cfg: IterationConfig, out: Path) -> Outcome:
    R = rational_from_operator(T)
    check = cross_validate_m1(T, cfg)
    exc = check.exceptionality
    write_csv(out / "julia.csv", check.julia_cloud.points)
    write_csv(out / "engine.csv", check.engine_cloud.points)
    _png(opts, check.julia_cloud, out / "julia.png")
    rep = {
        "rational_map": R.to_json(),
        "cancelled_common_zeros": R.cancelled,
        "exceptionality": {
            "nonexceptional": exc.nonexceptional,
            "exceptional_points": ["inf" if e == math.inf else e for e in exc.exceptional_points],
            "reason": exc.reason,
            "boundary_case": exc.boundary_case,
        },
        "minimal_candidates": [[c] for c in check.candidates],
        "julia_points": len(check.julia_cloud),
        "engine_points": len(check.engine_cloud),
        "hausdorff": check.hausdorff,
        "passed": check.passed,
        "julia_converged": check.sample.converged,
        "julia_start": check.sample.start_kind,
        "backward_gap": check.sample.backward_gap,
        "forward_gap": check.sample.forward_gap,
        "report": check.report.splitlines(),
    }
    return Outcome(rep)


def _n_range(text: str) -> list[int]:
    try:
        if "-" in text:
            lo, hi = (int(t) for t in text.split("-", 1))
            ns = list(range(lo, hi + 1))
        else:
            ns = [int(t) for t in text.split(",")]
    except ValueError:
        raise ParseError(f"bad n range {text!r}; use 3-5 or 3,4,5") from None
    if not ns or min(ns) < 1:
        raise ParseError("n values must be positive")
    return ns


def run_converge(T: DiffOperator, opts: dict, cfg: IterationConfig, out: Path) -> Outcome:
    rows = convergence_study(T, _n_range(opts["n_range"]), cfg)
    lines = ["n,sup_out,coverage,status"]
    for r in rows:
        lines.append(f"{r.n},{r.sup_out:.17g},{r.coverage:.17g},{r.report.status.value}")
        write_csv(out / f"cloud_n{r.n}.csv", r.report.cloud.points)
    (out / "converge.csv").write_text("\n".join(lines) + "\n")
    cov = [r.coverage for r in rows]
    rep = {
        "rows": [{"n": r.n, "sup_out": r.sup_out, "coverage": r.coverage,
                  "status": r.report.status.value} for r in rows],
        "coverage_decreasing": all(b < a for a, b in zip(cov, cov[1:])),
    }
    return Outcome(rep)


def run_correspond(T: Optional[DiffOperator], opts: dict, cfg, out) -> Outcome:
    what = opts["what"]
    if what == "psi":
        B = psi(T, opts["n"])
        rep = {"n": opts["n"], "coeffs": bipoly_to_json(B)}
        maps = detect_affine_ifs(B, opts["n"])
        if maps is not None:
            rep["affine_maps"] = [[m.a, m.b] for m in maps]
        return Outcome(rep)
    if what == "phi":
        B = bipoly_from_json(opts["matrix"], "matrix")
        return Outcome(operator_to_json(phi(B, opts["k"])))
    if what == "one-point":
        rep = one_point_sets(T, opts["n"])
        return Outcome({
            "points": [{"z0": p.z0, "kind": p.kind.value, "spread": p.spread} for p in rep.points],
            "infinite_family": rep.infinite_family,
            "family_data": None if rep.family_data is None else {
                "multiplicity": rep.family_data[0], "phi": rep.family_data[1].coeffs},
        })
    if what == "family":
        Q = _family_poly(opts["q"], opts["m"])
        return Outcome(operator_to_json(family_operator(opts["m"], opts["n"], Q)))
    if what == "ifs":
        maps = [AffineMap(_num(a, "a"), _num(b, "b")) for a, b in opts["maps"]]
        scale = _num(opts["scale"], "scale")
        return Outcome(operator_to_json(operator_from_affine_ifs(maps, scale)))
    raise ParseError(f"unknown correspondence {what!r}")


def _family_poly(text: str, m: int) -> ComplexPoly:
    """``"a=1,b=0"``: ``a`` multiplies ``x^m``, ``b`` multiplies ``x^(m-1)``, and so on."""
    coeffs = [0j] * (m + 1)
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, _, value = part.partition("=")
        name = name.strip()
        if len(name) != 1 or not "a" <= name <= "z" or not value:
            raise ParseError(f"bad coefficient {part!r}; expected letter=value")
        k = ord(name) - ord("a")
        if k > m:
            raise ParseError(f"coefficient {name} is beyond degree {m}")
        coeffs[m - k] = _num(value.strip(), name)
    return ComplexPoly(coeffs)


def _maps_arg(text: str) -> list[list[complex]]:
    data = _load_json(text, "--maps")
    if not isinstance(data, list) or not data:
        raise ParseError("--maps must be a nonempty JSON list of [a, b] pairs")
    maps = []
    for i, m in enumerate(data):
        if not isinstance(m, list) or len(m) != 2:
            raise ParseError(f"--maps[{i}] must be an [a, b] pair")
        maps.append([_num(m[0], f"--maps[{i}].a"), _num(m[1], f"--maps[{i}].b")])
    return maps


RUNNERS: dict[str, Callable] = {
    "classify": run_classify,
    "iterate": run_iterate,
    "julia": run_julia,
    "converge": run_converge,
    "correspond": run_correspond,
}
WRITES_FILES = {"iterate", "julia", "converge"}


def manifest(command: str, spec: Optional[dict], opts: dict, cfg: IterationConfig) -> dict:
    return {
        "tool": "minvset",
        "version": __version__,
        "backend": BACKEND,
        "command": command,
        "operator": spec,
        "options": opts,
        "config": cfg.to_dict(),
        "rng_seed": cfg.rng_seed,
    }


def execute(command: str, spec: Optional[dict], opts: dict, cfg: IterationConfig,
            out: Optional[Path]) -> int:
    T = operator_from_json(spec) if spec is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    outcome = RUNNERS[command](T, opts, cfg, out)
    text = dump_json(outcome.report)
    if out is not None:
        (out / "report.json").write_text(text)
        (out / "manifest.json").write_text(dump_json(manifest(command, spec, opts, cfg)))
    if command in ("classify", "correspond") or out is None:
        sys.stdout.write(text)
    else:
        status = outcome.report.get("status")
        sys.stdout.write(f"{command}: {status or 'done'}; wrote {out}\n")
    return outcome.code


def replay(path: str, out: Optional[str]) -> int:
    data = _load_json(_read_text(path), path)
    try:
        command, opts, config = data["command"], data["options"], data["config"]
    except (KeyError, TypeError):
        raise ParseError(f"{path}: not a run manifest") from None
    if command not in RUNNERS:
        raise ParseError(f"{path}: unknown command {command!r}")
    try:
        cfg = IterationConfig(**config)
    except TypeError as exc:
        raise ParseError(f"{path}: bad config: {exc}") from None
    target = Path(out) if out else Path(path).parent / "replay"
    return execute(command, data.get("operator"), opts, cfg, target)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, help="grid resolution of the point clouds")
    p.add_argument("--rmax", type=float, help="escape radius (default: from the operator)")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--seed", type=int, help="RNG seed")
    p.add_argument("--samples", type=int, help="random polynomials per step in full mode")


def _out_flags(p: argparse.ArgumentParser, default: Optional[str]) -> None:
    p.add_argument("--out", default=default, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minvset",
        description="Invariant sets of exactly solvable differential operators.",
    )
    parser.add_argument("--version", action="version", version=f"minvset {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="Fuchs index, spectrum and existence diagnostics")
    p.add_argument("spec", help="operator spec JSON ('-' for stdin)")
    p.add_argument("--n", type=int, help="degree of the spectrum slice (default: the order)")
    _out_flags(p, None)

    p = sub.add_parser("iterate", help="approximate the minimal invariant set at degree n")
    p.add_argument("spec")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.HUTCHINSON.value)
    _config_flags(p)
    p.add_argument("--png", metavar="WxH")
    _out_flags(p, DEFAULT_OUT)

    p = sub.add_parser("julia", help="degree-one map, its Julia set and the cross-check")
    p.add_argument("spec")
    _config_flags(p)
    p.add_argument("--png", metavar="WxH")
    _out_flags(p, DEFAULT_OUT)

    p = sub.add_parser("converge", help="distance to the fundamental polygon over a range of n")
    p.add_argument("spec")
    p.add_argument("--n-range", dest="n_range", required=True, help="e.g. 3-5 or 3,5,8")
    _config_flags(p)
    _out_flags(p, DEFAULT_OUT)

    p = sub.add_parser("correspond", help="operator <-> bivariate polynomial constructions")
    csub = p.add_subparsers(dest="what", required=True)
    q = csub.add_parser("psi", help="coefficient matrix of T[(x - z)^n]")
    q.add_argument("spec")
    q.add_argument("--n", type=int, required=True)
    _out_flags(q, None)
    q = csub.add_parser("phi", help="operator realising a coefficient matrix")
    q.add_argument("matrix", help="JSON file with the matrix (as written by 'psi')")
    q.add_argument("--k", type=int, required=True)
    _out_flags(q, None)
    q = csub.add_parser("one-point", help="one-point invariant sets")
    q.add_argument("spec")
    q.add_argument("--n", type=int, required=True)
    _out_flags(q, None)
    q = csub.add_parser("family", help="operator for which every point is invariant")
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--q", required=True, help='coefficients of Q_m, e.g. "a=1,b=0"')
    _out_flags(q, None)
    q = csub.add_parser("ifs", help="operator realising an affine IFS")
    q.add_argument("--maps", required=True, help='JSON list of [a, b], e.g. "[[-2.25,1],[0.375,1]]"')
    q.add_argument("--scale", default="1", help="leading scale (default 1)")
    _out_flags(q, None)

    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="output directory (default: <manifest dir>/replay)")
    return parser


def _options(args: argparse.Namespace) -> tuple[Optional[dict], dict]:
    """The operator spec (if any) and the JSON-safe options of a parsed command line."""
    opts = {k: v for k, v in vars(args).items() if k not in ("command", "spec", "out")}
    spec = None
    if getattr(args, "spec", None) is not None:
        _, spec = read_operator(args.spec)
    if opts.get("what") == "phi":
        opts["matrix"] = _load_json(_read_text(opts["matrix"]), opts["matrix"])
    if opts.get("png"):
        parse_size(opts["png"])  # fail before a long run, not after it
    if opts.get("what") == "ifs":
        opts["maps"] = [[_pair(a), _pair(b)] for a, b in _maps_arg(opts["maps"])]
        opts["scale"] = _pair(_num(opts["scale"], "--scale"))
    return spec, opts


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            return replay(args.manifest, args.out)
        spec, opts = _options(args)
        cfg = _config(opts)
        cfg.validate(Mode(opts.get("mode", "hutchinson")), opts.get("n") or 1)
        out = Path(args.out) if args.out else None
        return execute(args.command, spec, opts, cfg, out)
    except ParseError as exc:
        print(f"minvset: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PreconditionError as exc:
        print(f"minvset: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except MinvsetError as exc:
        print(f"minvset: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
