"""Problem files, run configuration and the ``multisum`` command line.

Problem files are JSON::

    {
      "m": 1, "n_space": 1, "max_degree": 0,
      "initial": [{"0": 1.0}],
      "terms": [{"i": 0, "alpha": [1], "A": [[0]], "t_coeffs": [{"0": 1.0}]}],
      "levels": {"ks": [1.0], "thetas": [0.0]}
    }

Monomial maps use comma-separated exponent strings as keys and either a
number or ``[re, im]`` as values.  ``t_coeffs[n]`` is the coefficient of
``t^n``; missing trailing orders are zero.  Directions are in radians.
"""

import argparse
from dataclasses import asdict, dataclass, field, fields, replace
import csv
import hashlib
import json
import math
import os
from pathlib import Path
import sys

import numpy as np

from .borel_laplace import pade_from_coefficients
from .cauchy_solver import (
    CauchyProblem,
    MultiLevel,
    SolverSettings,
    TermIndex,
    convolution_fixpoint,
    formal_solve,
    normalize,
    resum,
    unnormalize,
)
from .errors import (
    AuditFailure,
    DegeneracyError,
    DomainError,
    NumericFailure,
    ParameterError,
    TruncationError,
    ValidationError,
)
from .majorant import bound_audit, fit_constants, implicit_witness, m_sequence, theta_build
from .series_core import TSeries, XPoly, dump_series, gevrey_fit, monomials

__all__ = [
    "RunConfig",
    "load_config",
    "load_problem",
    "loads_problem",
    "save_problem",
    "dumps_problem",
    "problem_to_dict",
    "run_command",
    "main",
    "EXIT_OK",
    "EXIT_VALIDATION",
    "EXIT_NUMERIC",
]

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3
ENV_PREFIX = "MULTISUM_"


@dataclass
class RunConfig:
    order: int = 40
    max_degree: int = None
    tol: float = 1e-12
    tail_cut: float = 1e-17
    pade_num: int = None
    pade_den: int = None
    pole_angle: float = 0.05
    contour_delta: float = None
    contour_r0: float = 1.0
    out_dir: str = "."
    workers: int = 1
    theta_deg: float = None
    audit_levels: int = 10
    t_points: list = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.3])
    x_points: list = None
    profile_radii: int = 40

    def validate(self):
        for name in ("tol", "tail_cut", "pole_angle", "contour_r0"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"config: {name} must be > 0")
        if self.order < 4:
            raise ValidationError("config: order must be >= 4")
        if self.max_degree is not None and self.max_degree < 0:
            raise ValidationError("config: max_degree must be >= 0")
        if self.workers < 1:
            raise ValidationError("config: workers must be >= 1")
        if self.audit_levels < 1:
            raise ValidationError("config: audit_levels must be >= 1")
        return self

    def settings(self):
        return SolverSettings(
            order=self.order,
            tol=self.tol,
            tail_cut=self.tail_cut,
            pade_num=self.pade_num,
            pade_den=self.pade_den,
            pole_angle=self.pole_angle,
            workers=self.workers,
        )

    def canonical(self):
        """Settings that affect results (the output directory does not)."""
        d = asdict(self)
        d.pop("out_dir")
        return json.dumps(d, sort_keys=True, default=str)


_CASTS = {"int": int, "float": float, "str": str}


def _cast(name, raw):
    default = RunConfig.__dataclass_fields__[name].default
    if name in ("t_points", "x_points"):
        return json.loads(raw)
    kind = {
        "order": int, "max_degree": int, "pade_num": int, "pade_den": int, "workers": int,
        "audit_levels": int, "profile_radii": int, "out_dir": str,
    }.get(name, float)
    if raw.lower() in ("none", "null") and default is None:
        return None
    return kind(raw)


def load_config(path=None, env=None, overrides=None):
    """Defaults, then the JSON file, then ``MULTISUM_*`` variables, then ``overrides``."""
    env = os.environ if env is None else env
    values = {}
    if path is not None:
        try:
            values.update(json.loads(Path(path).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    names = {f.name for f in fields(RunConfig)}
    unknown = set(values) - names
    if unknown:
        raise ValidationError(f"config: unknown fields {sorted(unknown)}")
    for name in names:
        key = ENV_PREFIX + name.upper()
        if key in env:
            try:
                values[name] = _cast(name, env[key])
            except (ValueError, json.JSONDecodeError) as exc:
                raise ValidationError(f"environment {key}: cannot parse {env[key]!r}") from exc
    for name, v in (overrides or {}).items():
        if v is not None:
            values[name] = v
    return RunConfig(**values).validate()


def _parse_scalar(v, where):
    if isinstance(v, bool):
        raise ValidationError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(p, (int, float)) for p in v):
        return complex(v[0], v[1])
    raise ValidationError(f"{where}: expected a number or [re, im], got {v!r}")


def _dump_scalar(c):
    c = complex(c)
    return c.real if c.imag == 0 else [c.real, c.imag]


def _parse_monomials(obj, n_space, where):
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected a monomial map")
    out = {}
    for key, v in obj.items():
        try:
            e = tuple(int(p) for p in str(key).split(",")) if str(key) else ()
        except ValueError as exc:
            raise ValidationError(f"{where}: bad exponent key {key!r}") from exc
        if len(e) != n_space or any(p < 0 for p in e):
            raise ValidationError(f"{where}: exponent {key!r} must have {n_space} nonnegative entries")
        out[e] = _parse_scalar(v, f"{where}[{key!r}]")
    return out


def _dump_monomials(p):
    return {",".join(str(v) for v in e): _dump_scalar(c) for e, c in sorted(p.coeffs.items())}


def _require(obj, name, where, kind=None):
    if name not in obj:
        raise ValidationError(f"{where}: missing field {name!r}")
    v = obj[name]
    if kind is not None and not isinstance(v, kind):
        raise ValidationError(f"{where}: field {name!r} has the wrong type")
    return v


def problem_from_dict(doc, order=None, max_degree=None):
    """Validate a parsed problem document; returns ``(CauchyProblem, MultiLevel)``."""
    if not isinstance(doc, dict):
        raise ValidationError("problem: top level must be an object")
    m = _require(doc, "m", "problem", int)
    ns = _require(doc, "n_space", "problem", int)
    if m < 1 or ns < 1:
        raise ValidationError("problem: m and n_space must be >= 1")
    initial_raw = _require(doc, "initial", "problem", list)
    terms_raw = _require(doc, "terms", "problem", list)
    if len(initial_raw) != m:
        raise ValidationError(f"problem: 'initial' has {len(initial_raw)} entries, expected m = {m}")
    initial_maps = [_parse_monomials(p, ns, f"initial[{i}]") for i, p in enumerate(initial_raw)]

    parsed_terms = []
    for idx, t in enumerate(terms_raw):
        where = f"terms[{idx}]"
        if not isinstance(t, dict):
            raise ValidationError(f"{where}: expected an object")
        i = _require(t, "i", where, int)
        if not 0 <= i < m:
            raise ValidationError(f"{where}: equation index {i} outside 0..{m - 1}")
        alpha = _require(t, "alpha", where, list)
        A = _require(t, "A", where, list)
        if len(alpha) != m or len(A) != m or any(not isinstance(r, list) or len(r) != ns for r in A):
            raise ValidationError(f"{where}: alpha must have {m} entries and A shape {m}x{ns}")
        try:
            key = TermIndex(tuple(alpha), tuple(tuple(r) for r in A))
        except (ParameterError, TypeError, ValueError) as exc:
            raise ValidationError(f"{where}: {exc}") from exc
        coeffs = _require(t, "t_coeffs", where, list)
        maps = [_parse_monomials(c, ns, f"{where}.t_coeffs[{n}]") for n, c in enumerate(coeffs)]
        parsed_terms.append((i, key, maps))

    file_order = doc.get("order")
    if order is None:
        order = file_order if file_order is not None else max(
            [len(maps) - 1 for _, _, maps in parsed_terms] + [4]
        )
    if not isinstance(order, int) or order < 1:
        raise ValidationError("problem: order must be a positive integer")
    degrees = [sum(e) for mp in initial_maps for e in mp] + [
        sum(e) for _, _, maps in parsed_terms for mp in maps for e in mp
    ]
    if max_degree is None:
        max_degree = doc.get("max_degree", max(degrees + [0]))
    if not isinstance(max_degree, int) or max_degree < 0:
        raise ValidationError("problem: max_degree must be a nonnegative integer")
    too_high = [d for d in degrees if d > max_degree]
    if too_high:
        raise TruncationError(
            f"problem data has x-degree {max(too_high)} above max_degree {max_degree}", required=max(too_high)
        )

    mono = monomials(ns, max_degree)
    terms = [dict() for _ in range(m)]
    for i, key, maps in parsed_terms:
        if key in terms[i]:
            raise ValidationError(f"equation {i}: term {key} listed twice")
        data = np.zeros((order + 1, mono.size), dtype=complex)
        for n, mp in enumerate(maps[: order + 1]):
            for e, c in mp.items():
                data[n, mono.index[e]] = c
        terms[i][key] = TSeries(data, ns, max_degree)
    initial = [XPoly.from_dict(mp, ns, max_degree) for mp in initial_maps]
    try:
        problem = CauchyProblem(
            m, ns, terms, initial, order, max_degree, float(doc.get("R0", 1.0)), float(doc.get("R1", 1.0))
        )
    except ParameterError as exc:
        raise ValidationError(f"problem: {exc}") from exc

    levels = doc.get("levels", {"ks": [1.0], "thetas": [0.0]})
    if not isinstance(levels, dict):
        raise ValidationError("problem: 'levels' must be an object")
    try:
        ml = MultiLevel(tuple(_require(levels, "ks", "levels", list)), tuple(_require(levels, "thetas", "levels", list)))
    except ParameterError as exc:
        raise ValidationError(f"levels: {exc}") from exc
    return problem, ml


def problem_to_dict(problem, ml=None):
    """Inverse of :func:`problem_from_dict` (trailing zero orders are omitted)."""
    terms = []
    for i, tm in enumerate(problem.terms):
        for key in sorted(tm):
            s = tm[key]
            rows = [XPoly(s.data[n], s.n_space, s.max_degree) for n in range(s.order + 1)]
            while len(rows) > 1 and rows[-1].is_zero():
                rows.pop()
            terms.append(
                {
                    "i": i,
                    "alpha": list(key.alpha),
                    "A": [list(r) for r in key.A],
                    "t_coeffs": [_dump_monomials(r) for r in rows],
                }
            )
    doc = {
        "m": problem.m,
        "n_space": problem.n_space,
        "max_degree": problem.max_degree,
        "order": problem.order,
        "R0": problem.R0,
        "R1": problem.R1,
        "initial": [_dump_monomials(p) for p in problem.initial],
        "terms": terms,
    }
    if ml is not None:
        doc["levels"] = {"ks": list(ml.ks), "thetas": list(ml.thetas)}
    return doc


def loads_problem(text, order=None, max_degree=None, source="<string>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return problem_from_dict(doc, order, max_degree)


def load_problem(path, order=None, max_degree=None):
    """Read and validate a problem file; returns ``(CauchyProblem, MultiLevel)``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read problem file {path}: {exc}") from exc
    return loads_problem(text, order, max_degree, source=str(path))


def dumps_problem(problem, ml=None):
    return json.dumps(problem_to_dict(problem, ml), indent=1, sort_keys=True) + "\n"


def save_problem(problem, path, ml=None):
    Path(path).write_text(dumps_problem(problem, ml), encoding="utf-8")


def _load_points(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read points file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("points file must be an object with 't' and optional 'x'")
    t = [_parse_scalar(v, f"points.t[{i}]") for i, v in enumerate(doc.get("t", []))]
    return t, doc.get("x")


def config_hash(cfg, problem_doc):
    h = hashlib.sha256()
    h.update(cfg.canonical().encode())
    h.update(json.dumps(problem_doc, sort_keys=True).encode())
    return h.hexdigest()[:16]


def _with_theta(ml, cfg):
    if cfg.theta_deg is None:
        return ml
    th = math.radians(cfg.theta_deg)
    # a single override direction applies to every level
    return MultiLevel(ml.ks, tuple(th for _ in ml.ks))


def _t_points(cfg, ml):
    rot = np.exp(1j * ml.thetas[-1])
    out = []
    for v in cfg.t_points:
        c = _parse_scalar(v, "t_points")
        out.append(c * rot if c.imag == 0 and c.real > 0 else c)
    return out


def _x_points(cfg, problem):
    if cfg.x_points is None:
        return [np.zeros(problem.n_space)]
    pts = [np.asarray(x, dtype=float).reshape(-1) for x in cfg.x_points]
    if any(p.size != problem.n_space for p in pts):
        raise ValidationError(f"x points must have {problem.n_space} coordinates")
    return pts


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(v):
    return repr(float(v))


def _cmd_formal_solve(problem, ml, cfg, out, chash):
    np_ = normalize(problem)
    N = min(cfg.order, np_.order)
    u = unnormalize(np_, formal_solve(np_, N))
    paths = []
    for r, s in enumerate(u):
        path = out / f"solution_u{r + 1}.series"
        dump_series(s, path)
        paths.append(path)
    return paths


def _cmd_borel(problem, ml, cfg, out, chash):
    np_ = normalize(problem)
    L = min(cfg.order, np_.order)
    graded = convolution_fixpoint(np_, ml.ks[0], ml.thetas[0], L)
    paths = []
    for r in range(np_.m):
        path = out / f"borel_v{r + 1}.series"
        dump_series(graded.total(r), path)
        paths.append(path)
    return paths


def _cmd_gevrey(problem, ml, cfg, out, chash):
    np_ = normalize(problem)
    N = min(cfg.order, np_.order)
    u = unnormalize(np_, formal_solve(np_, N))
    lines = []
    for r, s in enumerate(u):
        norms = s.norms()[: N + 1]
        if np.count_nonzero(norms[1:]) < 8:
            lines.append(f"u{r + 1}\tconvergent\tpolynomial with {np.count_nonzero(norms)} nonzero terms\tconfig={chash}")
            continue
        fit = gevrey_fit(norms)
        label = "convergent" if fit.convergent else f"k={fit.k_est:.6g}"
        lines.append(
            f"u{r + 1}\t{label}\tinv_k={fit.inv_k:.6g}\tM={fit.M_est:.6g}\tC={fit.C_est:.6g}\t"
            f"residual={fit.residual:.3g}\tconfig={chash}"
        )
    path = out / "gevrey.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return [path]


def _cmd_resum(problem, ml, cfg, out, chash):
    table = resum(problem, ml, _t_points(cfg, ml), _x_points(cfg, problem), cfg.settings())
    header = ["t_re", "t_im"]
    header += [f"x_{j + 1}_re" for j in range(problem.n_space)]
    header += [f"u_{i + 1}_{part}" for i in range(problem.m) for part in ("re", "im")]
    header += ["err_est", "stage_flags", "config_hash"]
    rows = []
    for row in table.rows:
        vals = [_fmt(row.t.real), _fmt(row.t.imag)] + [_fmt(v) for v in row.x]
        for v in row.values:
            vals += [_fmt(v.real), _fmt(v.imag)]
        vals += [_fmt(row.err_est), row.stage_flags, chash]
        rows.append(vals)
    path = out / "solution.csv"
    _write_csv(path, header, rows)
    return [path]


def _cmd_majorant_audit(problem, ml, cfg, out, chash):
    np_ = normalize(problem)
    L = min(cfg.audit_levels, np_.order)
    k = ml.ks[0]
    graded = convolution_fixpoint(np_, k, ml.thetas[0], L)
    mj = theta_build(max(16, np_.max_degree), R=problem.R1)
    cst = fit_constants(np_, k, mj)
    ms = m_sequence(cst, L)
    wit = implicit_witness(cst.G_prime, cst.M1, L, ms)
    report = bound_audit(graded, ms, mj, raise_on_fail=False)
    rows = []
    for r in range(np_.m):
        for ell in range(1, L + 1):
            rows.append([r + 1, ell, _fmt(ms[r, ell]), _fmt(wit.C[r][ell - 1]), chash])
    path = out / "majorant_audit.csv"
    _write_csv(path, ["unknown", "grade", "M", "C_witness", "config_hash"], rows)
    summary = out / "majorant_summary.txt"
    summary.write_text(
        f"theta c={mj.c:.6g} (certified to order {mj.order}; truncation-dependent)\n"
        f"G={cst.G:.6g} C0={cst.C0:.6g} R={cst.R:.6g}\n"
        f"witness_equal={wit.equal} max_rel_diff={wit.max_rel_diff:.3g} radius={wit.radius:.6g}\n"
        f"bound_audit max_slack={report['max_slack']:.6g} failures={len(report['failures'])}\n"
        f"config={chash}\n",
        encoding="utf-8",
    )
    if report["failures"]:
        r, ell, e, s = report["failures"][0]
        raise AuditFailure(f"grade bound violated at unknown {r + 1}, grade {ell}, monomial {e}", witness=(r, ell, e))
    if not wit.equal:
        raise AuditFailure("implicit-function witness disagrees with the M sequence")
    return [path, summary]


def _cmd_plot_data(problem, ml, cfg, out, chash):
    np_ = normalize(problem)
    L = min(cfg.order, np_.order)
    graded = convolution_fixpoint(np_, ml.ks[0], ml.thetas[0], L)
    settings = cfg.settings()
    pole_rows = []
    for r in range(np_.m):
        base = graded.total(r)
        for s, k in enumerate(ml.ks):
            series = base if s == 0 else type(base)(k, base.data, base.n_space, base.max_degree)
            for xi_idx, x in enumerate(_x_points(cfg, problem)):
                c = series.power_coefficients(x)
                if not np.any(c):
                    continue
                half = (series.order - 1) // 2
                approx = pade_from_coefficients(
                    c, half if cfg.pade_num is None else cfg.pade_num, half if cfg.pade_den is None else cfg.pade_den, k
                )
                for pole, res in zip(approx.poles, approx.residues):
                    pole_rows.append(
                        [r + 1, _fmt(k), xi_idx, _fmt(pole.real), _fmt(pole.imag), _fmt(abs(res)), chash]
                    )
    poles = out / "poles.csv"
    _write_csv(poles, ["unknown", "level", "x_index", "pole_re", "pole_im", "residue_abs", "config_hash"], pole_rows)
    t_max = max(abs(_parse_scalar(v, "t_points")) for v in cfg.t_points)
    radii = np.linspace(t_max / cfg.profile_radii, t_max, cfg.profile_radii)
    ts = radii * np.exp(1j * ml.thetas[-1])
    table = resum(problem, ml, ts, _x_points(cfg, problem)[:1], settings)
    prof_rows = []
    for row in table.rows:
        prof_rows.append(
            [_fmt(abs(row.t)), _fmt(np.angle(row.t))] + [_fmt(abs(v)) for v in row.values] + [_fmt(row.err_est), chash]
        )
    profile = out / "ray_profile.csv"
    _write_csv(
        profile,
        ["t_abs", "t_arg"] + [f"abs_u_{i + 1}" for i in range(problem.m)] + ["err_est", "config_hash"],
        prof_rows,
    )
    return [poles, profile]


COMMANDS = {
    "formal-solve": _cmd_formal_solve,
    "borel": _cmd_borel,
    "gevrey": _cmd_gevrey,
    "resum": _cmd_resum,
    "majorant-audit": _cmd_majorant_audit,
    "plot-data": _cmd_plot_data,
}


def _error_record(exc, code):
    rec = {"error": type(exc).__name__, "message": str(exc), "exit": code}
    for attr in ("stage", "estimate", "required", "pole", "witness"):
        v = getattr(exc, attr, None)
        if v is not None:
            rec[attr] = repr(v) if isinstance(v, complex) else (v if isinstance(v, (int, float, str)) else repr(v))
    return json.dumps(rec)


def run_command(cmd, cfg, problem_path, stderr=None):
    """Run one subcommand; returns ``(exit_code, artifact_paths)``."""
    stderr = sys.stderr if stderr is None else stderr
    try:
        if cmd not in COMMANDS:
            raise ValidationError(f"unknown command {cmd!r}; choose from {sorted(COMMANDS)}")
        cfg = cfg.validate()
        problem, ml = load_problem(problem_path, order=None, max_degree=cfg.max_degree)
        if problem.order > cfg.order:
            # the file's order is the order to which its data is exact, so only truncate
            problem, ml = load_problem(problem_path, order=cfg.order, max_degree=cfg.max_degree)
        ml = _with_theta(ml, cfg)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        chash = config_hash(cfg, problem_to_dict(problem, ml))
        paths = COMMANDS[cmd](problem, ml, cfg, out, chash)
        return EXIT_OK, paths
    except (ValidationError, ParameterError, DomainError, TruncationError) as exc:
        print(_error_record(exc, EXIT_VALIDATION), file=stderr)
        return EXIT_VALIDATION, []
    except (NumericFailure, DegeneracyError, AuditFailure) as exc:
        print(_error_record(exc, EXIT_NUMERIC), file=stderr)
        return EXIT_NUMERIC, []


def build_parser():
    parser = argparse.ArgumentParser(
        prog="multisum",
        description="Formal solutions, Borel/multisummation and majorant audits for nonlinear Cauchy problems.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--problem", required=True, help="problem file (JSON)")
    parser.add_argument("--config", help="run configuration (JSON)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--order", type=int, help="truncation order in t and xi")
    parser.add_argument("--theta", type=float, help="summation direction in degrees (all levels)")
    parser.add_argument("--points", help="JSON file with 't' (and optional 'x') evaluation points")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"out_dir": args.out, "order": args.order, "theta_deg": args.theta}
    try:
        if args.points:
            t, x = _load_points(args.points)
            overrides["t_points"] = [[c.real, c.imag] for c in t]
            if x is not None:
                overrides["x_points"] = x
        cfg = load_config(args.config, overrides=overrides)
    except (ValidationError, TypeError) as exc:
        print(_error_record(exc, EXIT_VALIDATION), file=sys.stderr)
        return EXIT_VALIDATION
    code, paths = run_command(args.command, cfg, args.problem)
    for p in paths:
        print(p)
    return code


if __name__ == "__main__":
    sys.exit(main())
