"""Command-line entry point: ``voronoi-twist <subcommand> ...``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage or config errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import bessel, coeffs, hankel, kloosterman, numberfield, twistsums, voronoi

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# -- output helpers ---------------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def provenance(module: str, operation: str, tolerance) -> dict:
    return {"module": module, "operation": operation, "tolerance": tolerance}


# -- run configs --------------------------------------------------------------------------------

EXPERIMENT_KINDS = ("voronoi", "weil", "hecke", "scan", "parseval", "smoothing", "dirichlet", "bessel",
                    "hankel_scan")

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer"},
        "workers": {"type": "integer", "minimum": 1},
        "output": {"type": "string"},
        "experiments": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"kind": {"enum": list(EXPERIMENT_KINDS)}, "name": {"type": "string"}},
                "required": ["kind"],
            },
        },
    },
    "required": ["experiments"],
    "additionalProperties": False,
}


@dataclass
class RunConfig:
    name: str = "run"
    experiments: list = field(default_factory=list)
    seed: int = 0
    workers: int = 1
    output: str = "out"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        jsonschema.validate(d, CONFIG_SCHEMA)
        return cls(**d)

    @property
    def digest(self) -> str:
        body = json.dumps({"name": self.name, "experiments": self.experiments, "seed": self.seed},
                          sort_keys=True)
        return hashlib.sha256(body.encode()).hexdigest()[:16]


@dataclass
class ExperimentResult:
    name: str
    passed: bool | None
    report: dict
    csv: tuple | None = None       # (header, rows)


def _voronoi_instance(spec: dict) -> voronoi.VoronoiInstance:
    rank = int(spec.get("rank", 2))
    return voronoi.VoronoiInstance.rational(
        rank, int(spec["alpha"]), int(spec["beta"]), float(spec["T"]), float(spec.get("rho", 0.0)),
        width=float(spec.get("delta", 2.0)), tol=float(spec.get("tol", 1e-4 if rank == 2 else 1e-2)))


def _report_voronoi(rep: voronoi.VoronoiReport, keep_time: bool) -> dict:
    d = rep.to_dict()
    if not keep_time:
        d.pop("seconds")
    d["provenance"] = provenance("voronoi", "verify_identity", rep.tol)
    return d


def exp_voronoi(spec: dict, cfg: RunConfig) -> ExperimentResult:
    insts = spec.get("instances", [spec])
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        reps = list(pool.map(lambda s: voronoi.verify_identity(_voronoi_instance({**spec, **s})), insts))
    rows = [(s.get("rank", spec.get("rank", 2)), s["alpha"], s["beta"], s.get("T", spec.get("T")),
             s.get("rho", spec.get("rho", 0.0)), r.rel_residual, r.tail, int(r.passed))
            for s, r in zip(insts, reps)]
    return ExperimentResult(spec.get("name", "voronoi"), all(r.passed for r in reps),
                            {"reports": [_report_voronoi(r, False) for r in reps]},
                            (("rank", "alpha", "beta", "T", "rho", "rel_residual", "tail", "pass"), rows))


def exp_weil(spec: dict, cfg: RunConfig) -> ExperimentResult:
    c_max = int(spec.get("c_max", 500))
    rep = kloosterman.weil_check(c_max)
    s113 = kloosterman.kloosterman_rational(1, 1, 3)
    ok = rep.violations == 0 and abs(s113 + 1) < 1e-10
    return ExperimentResult(spec.get("name", "weil"), ok,
                            {"c_max": c_max, "violations": rep.violations, "max_ratio": rep.max_ratio,
                             "S_1_1_3": s113, "provenance": provenance("kloosterman", "weil_check", 1e-9)},
                            (("c", "max_abs", "bound", "ratio"), list(rep.csv_rows())))


def exp_hecke(spec: dict, cfg: RunConfig) -> ExperimentResult:
    m_max = int(spec.get("m_max", 200))
    bad = coeffs.hecke_violations(m_max)
    t2, t6 = coeffs.tau(2), coeffs.tau(6)
    return ExperimentResult(spec.get("name", "hecke"), not bad and t2 == -24 and t6 == -6048,
                            {"m_max": m_max, "violations": len(bad), "tau2": t2, "tau6": t6,
                             "provenance": provenance("coeffs", "hecke_violations", 0)})


def exp_scan(spec: dict, cfg: RunConfig) -> ExperimentResult:
    prov = coeffs.make_provider(spec.get("provider", "delta"), spec.get("field", "Q"), cfg.seed)
    T_grid = [2.0 ** k for k in range(int(spec.get("log2_min", 8)), int(spec.get("log2_max", 14)) + 1)]
    thetas = spec.get("thetas")
    grid = np.array(thetas, float) if thetas is not None else twistsums.default_theta_grid()
    rep = twistsums.exponent_scan(prov, grid, T_grid)
    lo, hi = spec.get("slope_range", [-math.inf, math.inf])
    lo = -math.inf if lo is None else lo
    hi = math.inf if hi is None else hi
    summ = rep.summary()
    summ["provenance"] = provenance("twistsums", "exponent_scan", [lo, hi])
    return ExperimentResult(spec.get("name", "scan"), lo <= rep.slope <= hi, summ,
                            (("T", "theta_index", "re", "im", "abs"), list(rep.rows())))


def exp_parseval(spec: dict, cfg: RunConfig) -> ExperimentResult:
    prov = coeffs.make_provider(spec.get("provider", "delta"))
    T = float(spec.get("T", 1024))
    mean_sq, mass = twistsums.parseval_check(prov, T)
    rel = abs(mean_sq - mass) / mass
    tol = float(spec.get("tol", 0.02))
    return ExperimentResult(spec.get("name", "parseval"), rel < tol,
                            {"T": T, "mean_square": mean_sq, "coefficient_mass": mass, "relative_gap": rel,
                             "provenance": provenance("twistsums", "parseval_check", tol)})


def exp_smoothing(spec: dict, cfg: RunConfig) -> ExperimentResult:
    F = numberfield.load_field(spec.get("field", "Q"))
    dual_X = spec.get("dual_X", [4, 16, 64])
    l1_X = spec.get("l1_X", [4, 8, 16, 32, 64, 128, 256])
    viol = {X: twistsums.dual_violations(twistsums.SmoothingKernel(float(X), field=F)) for X in dual_X}
    gr = twistsums.l1_growth(l1_X, F)
    factor = float(spec.get("factor", 3.0))
    ok = all(v == 0 for v in viol.values()) and gr.spread <= factor
    return ExperimentResult(spec.get("name", "smoothing"), ok,
                            {"dual_violations": viol, "l1_spread": gr.spread,
                             "provenance": provenance("twistsums", "hX_l1", factor)},
                            (("X", "l1", "ratio"), list(zip(gr.X, gr.l1, gr.ratio))))


def exp_dirichlet(spec: dict, cfg: RunConfig) -> ExperimentResult:
    rng = np.random.default_rng(cfg.seed)
    rows, bad = [], 0
    for name in spec.get("fields", ["Q", "Qi", "Qsqrt2"]):
        F = numberfield.load_field(name)
        for Q in spec.get("Q", [10, 50]):
            for _ in range(int(spec.get("samples", 1000))):
                vals = rng.uniform(-1, 1, F.n_places) + 1j * np.where(
                    np.arange(F.n_places) < F.r1, 0.0, rng.uniform(-1, 1, F.n_places))
                res = numberfield.dirichlet_approx(F, vals, Q)
                ok = res.satisfies_bounds()
                bad += not ok
            rows.append((name, Q, res.constant, bad))
    return ExperimentResult(spec.get("name", "dirichlet"), bad == 0,
                            {"violations": bad,
                             "provenance": provenance("numberfield", "dirichlet_approx", "C_F")},
                            (("field", "Q", "constant", "cumulative_violations"), rows))


def _params(kind: str) -> bessel.BesselParamsReal:
    if kind == "delta":
        return bessel.BesselParamsReal.delta_form()
    if kind == "sym2":
        return bessel.BesselParamsReal.sym2_delta()
    if kind == "principal2":
        return bessel.BesselParamsReal((0.3j, -0.3j), (0, 0))
    if kind == "principal3":
        return bessel.BesselParamsReal((0.2j, 0, -0.2j), (0, 0, 0))
    raise ValueError(f"unknown kernel {kind!r}")


def exp_bessel(spec: dict, cfg: RunConfig) -> ExperimentResult:
    p = _params(spec.get("kernel", "delta"))
    lo, hi = spec.get("x_range", [5.0, 50.0])
    x = np.linspace(lo, hi, int(spec.get("points", 400)))
    rep = bessel.asymptotic_check_real(p, x)
    return ExperimentResult(spec.get("name", "bessel"), rep.frequency_ok,
                            {"rank": rep.rank, "frequency": rep.frequency, "envelope": list(rep.envelope),
                             "provenance": provenance("bessel", "asymptotic_check_real", 0.01)})


def exp_hankel_scan(spec: dict, cfg: RunConfig) -> ExperimentResult:
    p = _params(spec.get("kernel", "delta"))
    f = hankel.TestFunction(hankel.WeightSpec(float(spec.get("T", 20)), float(spec.get("delta", 2.0))),
                            float(spec.get("rho", 0.0)))
    y = np.geomspace(*spec.get("y_range", [0.01, 100.0]), int(spec.get("points", 60)))
    rep = hankel.decay_scan(p, f, y)
    return ExperimentResult(spec.get("name", "hankel_scan"), None,
                            {"exponents": rep.exponents, "window_sup": rep.window_sup,
                             "provenance": provenance("hankel", "decay_scan", None)},
                            (("y", "re", "im", "abs", "regime"), list(rep.rows())))


RUNNERS = {"voronoi": exp_voronoi, "weil": exp_weil, "hecke": exp_hecke, "scan": exp_scan,
           "parseval": exp_parseval, "smoothing": exp_smoothing, "dirichlet": exp_dirichlet,
           "bessel": exp_bessel, "hankel_scan": exp_hankel_scan}


def run(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": cfg.name, "config_hash": cfg.digest, "seed": cfg.seed, "artifacts": []}
    failed = False
    for spec in cfg.experiments:
        try:
            res = RUNNERS[spec["kind"]](spec, cfg)
        except Exception as exc:           # surface with module provenance, keep going
            res = ExperimentResult(spec.get("name", spec["kind"]), False,
                                   {"error": f"{spec['kind']}: {type(exc).__name__}: {exc}"})
        res.report.update({"pass": res.passed, "config_hash": cfg.digest})
        path = out / f"{res.name}_report.json"
        path.write_text(dumps(res.report))
        entry = {"name": res.name, "pass": res.passed, "report": path.name}
        if res.csv is not None:
            cpath = out / f"{res.name}.csv"
            cpath.write_text(csv_text(*res.csv))
            entry["csv"] = cpath.name
        manifest["artifacts"].append(entry)
        failed |= res.passed is False
    (out / "manifest.json").write_text(dumps(manifest))
    return EXIT_FAIL if failed else EXIT_OK


# -- subcommands --------------------------------------------------------------------------------


def _emit(obj, as_csv: tuple | None = None, path: str | None = None):
    text = csv_text(*as_csv) if as_csv is not None else dumps(obj)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_nf(a) -> int:
    F = numberfield.load_field(a.field)
    if a.action == "info":
        _emit({"field": F.name, "degree": F.degree, "r1": F.r1, "r2": F.r2,
               "dirichlet_constant": numberfield.dirichlet_constant(F)})
    elif a.action == "embed":
        e = F.integer(a.coords)
        _emit({"embedding": numberfield.embed(F, e).values, "norm": e.norm, "trace": e.trace})
    elif a.action == "enum":
        pts = numberfield.enumerate_lattice(F, a.T)
        _emit({"T": a.T, "count": len(pts), "points": pts})
    elif a.action == "approx":
        theta = list(a.theta)
        if len(theta) == F.degree and F.r2:
            # real coordinates: r1 reals, then (re, im) per complex place
            theta = theta[:F.r1] + [complex(theta[F.r1 + 2 * k], theta[F.r1 + 2 * k + 1])
                                    for k in range(F.r2)]
        r = numberfield.dirichlet_approx(F, theta, a.Q)
        _emit({"alpha": r.alpha.coords, "beta": r.beta.coords, "residuals": r.residuals,
               "ok": r.satisfies_bounds()})
    elif a.action == "inverse":
        x = numberfield.mod_inverse(F, F.integer(a.coords), F.integer(a.modulus))
        _emit({"inverse": x.coords})
    return EXIT_OK


def cmd_coeffs(a) -> int:
    args = a.args or [1]
    if a.action == "tau":
        _emit({"n": args[0], "tau": coeffs.tau(args[0])})
    elif a.action == "lambda":
        _emit({"n": args[0], "lambda": coeffs.gl2_lambda(args[0])})
    elif a.action == "sym2":
        m, n = (args + [1])[:2]
        _emit({"m": m, "n": n, "A": coeffs.gl3_sym2(m, n)})
    elif a.action == "hecke":
        bad = coeffs.hecke_violations(args[0])
        _emit({"m_max": args[0], "violations": len(bad)})
        return EXIT_FAIL if bad else EXIT_OK
    return EXIT_OK


def cmd_bessel(a) -> int:
    if a.mu:
        mu = [complex(v.replace(" ", "")) for v in a.mu.split(",")]
        delta = [int(v) for v in a.delta.split(",")] if a.delta else [0] * len(mu)
        p = bessel.BesselParamsReal(tuple(mu), tuple(delta))
    else:
        p = _params(a.kernel)
    if a.action == "eval":
        r = bessel.evaluate_real(p, np.array(a.x), tol=a.tol, method=a.method)
        _emit({"x": a.x, "value": r.value, "err": r.err, "method": r.method})
        return EXIT_OK
    x = np.linspace(a.x[0], a.x[-1], 400) if len(a.x) >= 2 else np.linspace(5, 50, 400)
    rep = bessel.asymptotic_check_real(p, x)
    _emit({"rank": rep.rank, "frequency": rep.frequency, "ok": rep.frequency_ok})
    return EXIT_OK if rep.frequency_ok else EXIT_FAIL


def cmd_hankel(a) -> int:
    p = _params(a.kernel)
    f = hankel.TestFunction(hankel.WeightSpec(a.T, a.delta), a.rho)
    if a.action == "eval":
        r = hankel.hankel_real(p, f, np.array(a.y), tol=a.tol)
        _emit({"y": a.y, "value": r.value, "err": r.err, "method": r.method})
        return EXIT_OK
    y = np.geomspace(a.y[0], a.y[-1], a.points) if len(a.y) >= 2 else np.geomspace(0.01, 100, a.points)
    rep = hankel.decay_scan(p, f, y)
    _emit(None, (("y", "re", "im", "abs", "regime"), list(rep.rows())), a.out)
    return EXIT_OK


def cmd_kloos(a) -> int:
    if a.action == "rational":
        x, y, c = (a.args + [1, 1, 3][len(a.args):])[:3]
        _emit({"a": x, "b": y, "c": c, "S": kloosterman.kloosterman_rational(x, y, c)})
        return EXIT_OK
    if a.action == "field":
        F = numberfield.load_field(a.field)
        inst = kloosterman.KloostermanInstance(F, F.integer(a.beta), F.integer(a.gamma), F.integer(a.gammap))
        _emit({"field": F.name, "S": kloosterman.kloosterman_field(inst)})
        return EXIT_OK
    rep = kloosterman.weil_check(a.c)
    _emit(None, (("c", "max_abs", "bound", "ratio"), list(rep.csv_rows())), a.out)
    return EXIT_OK if rep.violations == 0 else EXIT_FAIL


def cmd_voronoi(a) -> int:
    if a.batch:
        specs = json.loads(Path(a.batch).read_text())
    else:
        if a.field != "Q":
            sys.stderr.write("identity verification is available over Q only\n")
            return EXIT_USAGE
        specs = [{"rank": a.rank, "alpha": a.alpha, "beta": a.beta, "T": a.T, "delta": a.delta,
                  "rho": a.rho, "tol": a.tol}]
    reps = [voronoi.verify_identity(_voronoi_instance(s)) for s in specs]
    out = [_report_voronoi(r, True) for r in reps]
    _emit(out[0] if len(out) == 1 and not a.batch else out)
    return EXIT_OK if all(r.passed for r in reps) else EXIT_FAIL


def cmd_twist(a) -> int:
    prov = coeffs.make_provider(a.provider)
    if a.action == "sharp":
        _emit({"theta": a.theta, "T": a.T, "S": twistsums.sharp_sum(twistsums.TwistQuery(prov, a.theta, a.T))})
    elif a.action == "smooth":
        w = hankel.WeightSpec(a.T, sides="both")
        _emit({"theta": a.theta, "T": a.T,
               "S": twistsums.smooth_sum(twistsums.TwistQuery(prov, a.theta, a.T, "smooth", (w,)))})
    elif a.action == "scan":
        T_grid = [2.0 ** k for k in range(a.log2_min, a.log2_max + 1)]
        rep = twistsums.exponent_scan(prov, twistsums.default_theta_grid(), T_grid)
        _emit(None, (("T", "theta_index", "re", "im", "abs"), list(rep.rows())), a.out)
        sys.stderr.write(dumps(rep.summary()))
    elif a.action == "pipeline":
        _emit(twistsums.pipeline_bound_check(prov, a.theta, a.T).to_dict())
    return EXIT_OK


def cmd_run(a) -> int:
    try:
        d = json.loads(Path(a.config).read_text())
        if a.seed is not None:
            d["seed"] = a.seed
        if a.out is not None:
            d["output"] = a.out
        cfg = RunConfig.from_dict(d)
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError, TypeError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_USAGE
    return run(cfg)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="voronoi-twist", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nf", help="number-field arithmetic")
    p.add_argument("action", choices=["info", "embed", "enum", "approx", "inverse"])
    p.add_argument("--field", default="Q")
    p.add_argument("--coords", type=int, nargs="+", default=[1])
    p.add_argument("--modulus", type=int, nargs="+", default=[1])
    p.add_argument("--theta", type=complex, nargs="+", default=[0.0])
    p.add_argument("--Q", type=float, default=10.0)
    p.add_argument("--T", type=float, default=5.0)
    p.set_defaults(func=cmd_nf)

    p = sub.add_parser("coeffs", help="tau, lambda and symmetric-square coefficients")
    p.add_argument("action", choices=["tau", "lambda", "sym2", "hecke"])
    p.add_argument("args", type=int, nargs="*", help="n (tau, lambda, hecke bound) or m n (sym2)")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("bessel", help="Bessel kernels")
    p.add_argument("action", choices=["eval", "check"])
    p.add_argument("--kernel", default="delta")
    p.add_argument("--rank", type=int, help="implied by --mu; kept for symmetry with the kernel names")
    p.add_argument("--mu", help="comma-separated, e.g. --mu=0.3j,-0.3j")
    p.add_argument("--delta", help="comma-separated signs 0/1")
    p.add_argument("--x", type=float, nargs="+", default=[1.0])
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--method", default="auto")
    p.set_defaults(func=cmd_bessel)

    p = sub.add_parser("hankel", help="Hankel transforms")
    p.add_argument("action", choices=["eval", "scan"])
    p.add_argument("--kernel", default="delta")
    p.add_argument("--T", type=float, default=20.0)
    p.add_argument("--delta", type=float, default=2.0)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--y", type=float, nargs="+", default=[1.0])
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--points", type=int, default=60)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hankel)

    p = sub.add_parser("kloos", help="Kloosterman sums")
    p.add_argument("action", choices=["rational", "field", "weil"])
    p.add_argument("args", type=int, nargs="*", help="a b c for 'rational'")
    p.add_argument("--field", default="Qi")
    p.add_argument("--beta", type=int, nargs="+", default=[3, 0])
    p.add_argument("--gamma", type=int, nargs="+", default=[1, 0])
    p.add_argument("--gammap", type=int, nargs="+", default=[1, 0])
    p.add_argument("--c", type=int, default=500, help="largest modulus for 'weil'")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kloos)

    p = sub.add_parser("voronoi", help="Voronoi identity check")
    p.add_argument("action", choices=["verify"])
    p.add_argument("--rank", type=int, default=2, choices=[2, 3])
    p.add_argument("--field", default="Q")
    p.add_argument("--alpha", type=int, default=0)
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--T", type=float, default=20.0)
    p.add_argument("--delta", type=float, default=2.0)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--batch")
    p.set_defaults(func=cmd_voronoi)

    p = sub.add_parser("twist", help="twisted sums and scans")
    p.add_argument("action", choices=["sharp", "smooth", "scan", "pipeline"])
    p.add_argument("--provider", default="delta")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--T", type=float, default=64.0)
    p.add_argument("--log2-min", type=int, default=8)
    p.add_argument("--log2-max", type=int, default=14)
    p.add_argument("--out")
    p.set_defaults(func=cmd_twist)

    p = sub.add_parser("run", help="run a JSON experiment config")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, numberfield.UnsupportedFieldError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
