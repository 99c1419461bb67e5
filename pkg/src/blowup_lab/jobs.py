"""JSON job files: resolution with defaults, execution, deterministic reports.

A job names a potential (expression, radial + angular parts, or fixture),
a nonlinearity, grids and the tasks to run.  The resolved job, with every
default filled in, is echoed into the report and is itself a valid job.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import expr
from .classify import (
    INAPPLICABLE,
    INAPPLICABLE_NOTE,
    ClassifierOptions,
    classify_existence_integral,
    classify_slow_variation,
    existence_verdict,
)
from .errors import BlowupLabError, InvalidParameter
from .fixtures import get_fixture
from .kernel import build_grid
from .problem import (
    LambdaWarning,
    Nonlinearity,
    PotentialSpec,
    compute_constants,
    estimate_lambda,
    extract_radial_bounds,
)
from .solver import build_sub_super_pair, divergence_lower_bound, oracle_error
from .verify import inequality_harness, verify_decay_rate, verify_explicit_solution

TASKS = ("classify", "solve", "verify-explicit", "property-check")
BOUNDED_NOTE = (
    "bounded domain requested: no solution blowing up on the whole boundary exists for this "
    "problem on a bounded domain when f is sublinear; nothing is computed for this case"
)
VERSION = "0.1.0"


@dataclass
class GridOptions:
    r_max: float | None = None  # defaults to 2**ceiling_exponent
    node_count: int = 4096
    grading: float = 2.0


@dataclass
class SolverOptions:
    radius: float = 20.0
    node_count: int = 4096
    grading: float = 2.0
    base: float | None = None  # super-solution base; None -> computed threshold
    tol: float = 1e-10
    max_iterations: int = 200
    safety_factor: float = 1.05
    oracle: bool = True
    oracle_tolerance: float = 1e-5


@dataclass
class VerifyOptions:
    samples: int = 64
    radius: float = 2.0
    tolerance: float = 1e-7


@dataclass
class CheckOptions:
    trials: int = 500
    seed: int = 7
    dimensions: list = field(default_factory=lambda: [3, 4, 5, 10])


@dataclass
class DecayOptions:
    expected_exponent: float = -2.0
    window: list = field(default_factory=lambda: [1e2, 1e4])
    one_sided: bool = False


@dataclass
class Job:
    dimension: int
    potential: dict
    nonlinearity: dict
    tasks: list
    grid: GridOptions
    classifier: ClassifierOptions
    solver: SolverOptions
    verify: VerifyOptions
    check: CheckOptions
    decay_fit: DecayOptions | None = None
    solution: str | None = None
    domain: str = "entire"

    def echo(self) -> dict:
        return asdict(self)


def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise InvalidParameter(f"'{name}' must be an object")
    try:
        return cls(**data)
    except TypeError as exc:
        raise InvalidParameter(f"bad '{name}' section: {exc}") from None


KNOWN_KEYS = {"dimension", "potential", "nonlinearity", "tasks", "grid", "classifier", "solver",
              "verify", "check", "decay_fit", "solution", "domain"}


def resolve_job(data: dict) -> Job:
    """Validate a parsed job document and fill in defaults."""
    if not isinstance(data, dict):
        raise InvalidParameter("job must be a JSON object")
    unknown = set(data) - KNOWN_KEYS
    if unknown:
        raise InvalidParameter(f"unknown job keys: {sorted(unknown)}")
    potential = data.get("potential")
    if not isinstance(potential, dict):
        raise InvalidParameter("'potential' must be an object with 'fixture', 'expr' or 'radial'/'angular'")
    N = data.get("dimension", potential.get("params", {}).get("N", 3))
    if not isinstance(N, int) or N < 3:
        raise InvalidParameter(f"dimension must be an integer >= 3, got {N!r}")
    tasks = data.get("tasks", ["classify"])
    bad = [t for t in tasks if t not in TASKS]
    if bad or not tasks:
        raise InvalidParameter(f"tasks must be a nonempty subset of {TASKS}, got {tasks!r}")
    domain = data.get("domain", "entire")
    if domain not in ("entire", "bounded"):
        raise InvalidParameter("domain must be 'entire' or 'bounded'")
    nonlin = data.get("nonlinearity") or {}
    if not isinstance(nonlin, dict):
        raise InvalidParameter("'nonlinearity' must be an object")
    job = Job(
        dimension=N,
        potential=dict(potential),
        nonlinearity=dict(nonlin),
        tasks=[t for t in TASKS if t in tasks],
        grid=_section(GridOptions, data.get("grid"), "grid"),
        classifier=_section(ClassifierOptions, data.get("classifier"), "classifier"),
        solver=_section(SolverOptions, data.get("solver"), "solver"),
        verify=_section(VerifyOptions, data.get("verify"), "verify"),
        check=_section(CheckOptions, data.get("check"), "check"),
        decay_fit=None if data.get("decay_fit") is None else _section(DecayOptions, data["decay_fit"], "decay_fit"),
        solution=data.get("solution"),
        domain=domain,
    )
    if job.grid.r_max is None:
        job.grid.r_max = float(2.0**job.classifier.ceiling_exponent)
    if "fixture" in job.potential:
        job.potential.setdefault("params", {})
        job.potential["params"]["N"] = N
    return job


def load_job(path) -> Job:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidParameter(f"cannot read job file: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameter(f"job file is not valid JSON: {exc}") from None
    return resolve_job(data)


@dataclass
class Problem:
    potential: PotentialSpec
    nonlinearity: Nonlinearity
    solution: expr.Node | None


def build_problem(job: Job) -> Problem:
    pot = job.potential
    N = job.dimension
    sampling = {k: pot[k] for k in ("sample_count", "refinement_rounds") if k in pot}
    fixture = None
    if "fixture" in pot:
        fixture = get_fixture(pot["fixture"], **{**pot["params"], **sampling})
        p = fixture.potential
    elif "expr" in pot:
        p = PotentialSpec.from_text(pot["expr"], N, radial=bool(pot.get("radial", False)), **sampling)
    elif "radial" in pot and "angular" in pot:
        p = PotentialSpec.from_parts(pot["radial"], pot["angular"], N, **sampling)
    else:
        raise InvalidParameter("potential needs 'fixture', 'expr', or both 'radial' and 'angular'")

    nl = job.nonlinearity
    override = nl.get("lambda_override")
    if "expr" in nl:
        f = Nonlinearity.from_text(nl["expr"], lambda_override=override)
    elif "fixture" in nl:
        src = get_fixture(nl["fixture"], N=N).nonlinearity
        f = Nonlinearity(src.body, override)
    elif fixture is not None:
        f = Nonlinearity(fixture.nonlinearity.body, override)
    else:
        raise InvalidParameter("nonlinearity needs 'expr' (or a fixture potential to inherit from)")

    u = None
    if job.solution is not None:
        u = expr.parse_expression(job.solution, N)
    elif fixture is not None:
        u = fixture.solution
    return Problem(p, f, u)


def _finite(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    return obj


def write_csv(path: Path, r, values) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["r", "value"])
        for a, b in zip(np.asarray(r).tolist(), np.asarray(values).tolist()):
            writer.writerow([repr(float(a)), repr(float(b))])


class Runner:
    """Runs the tasks of one job, collecting results, failures and timings."""

    def __init__(self, job: Job, out_dir: Path):
        self.job = job
        self.out = Path(out_dir)
        self.results = {}
        self.timing = {}
        self.failures = []
        self.warnings = []
        self._classification = None

    def _timed(self, name, fn):
        t0 = time.perf_counter()
        try:
            return fn()
        finally:
            self.timing[name] = round(time.perf_counter() - t0, 6)

    def lam(self, problem):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", LambdaWarning)
            lam = estimate_lambda(problem.nonlinearity)
        self.warnings.extend(str(w.message) for w in caught)
        return lam

    def classification(self, problem):
        if self._classification is None:
            job = self.job
            lam = self.lam(problem)
            grid = build_grid(job.grid.r_max, job.grid.node_count, job.grid.grading)
            bounds = extract_radial_bounds(problem.potential, grid, lam)
            slow = classify_slow_variation(bounds, job.classifier)
            exist = classify_existence_integral(bounds, job.dimension, job.classifier)
            self._classification = (lam, bounds, slow, exist)
        return self._classification

    def classify(self, problem):
        lam, bounds, slow, exist = self.classification(problem)
        verdict = existence_verdict(slow, exist)
        out = {
            "lambda": lam,
            "scaled_lambda": bounds.scaled_lambda,
            "slow_variation": slow.as_dict(),
            "existence_integral": exist.as_dict(),
            "verdict": verdict,
        }
        if verdict == INAPPLICABLE:
            out["note"] = INAPPLICABLE_NOTE
        if self.job.decay_fit is not None:
            d = self.job.decay_fit
            fit = verify_decay_rate(bounds, d.expected_exponent, tuple(d.window), d.one_sided)
            out["decay_fit"] = fit.as_dict()
            if not fit.passed:
                self.failures.append(f"decay fit slope {fit.slope:.4g} outside tolerance")
        return out

    def solve(self, problem):
        job, opts = self.job, self.job.solver
        lam, cbounds, slow, _ = self.classification(problem)
        constants = compute_constants(cbounds, opts.radius, slow, opts.safety_factor)
        grid = build_grid(opts.radius, opts.node_count, opts.grading)
        sbounds = extract_radial_bounds(problem.potential, grid, lam)
        pair = build_sub_super_pair(sbounds, problem.nonlinearity, opts.radius, constants,
                                    opts.max_iterations, opts.tol, opts.base)
        b_sup = pair.sup.config.base
        lower = divergence_lower_bound(sbounds, problem.nonlinearity, b_sup, pair.sup)
        far = divergence_lower_bound(cbounds, problem.nonlinearity, b_sup)
        edges = [R for R, _ in slow.partial_values]
        out = {"constants": constants.as_dict(), "sandwich_worst_log_gap": pair.worst_gap}
        for name, rep in (("sub", pair.sub), ("super", pair.sup)):
            if opts.oracle:
                err = oracle_error(rep, sbounds, problem.nonlinearity)
                if err > opts.oracle_tolerance:
                    self.failures.append(f"{name}-solution oracle error {err:.3e} > {opts.oracle_tolerance:g}")
            if not rep.all_bounds_hold:
                self.failures.append(f"{name}-solution bound checks failed")
            out[name] = rep.as_dict()
            write_csv(self.out / f"{name}_solution.csv", rep.solution.nodes, rep.solution.values)
        write_csv(self.out / "divergence_lower_bound.csv", lower.nodes, lower.values)
        out["divergence_lower_bound"] = {
            "base": b_sup,
            "at_radius": [[R, float(far(R))] for R in edges],
            "existence_verdict": existence_verdict(*self.classification(problem)[2:]),
        }
        return out

    def verify_explicit(self, problem):
        if problem.solution is None:
            raise InvalidParameter("verify-explicit needs a 'solution' expression or a fixture that has one")
        v = self.job.verify
        rep = verify_explicit_solution(problem.solution, problem.potential.body, problem.nonlinearity,
                                       self.job.dimension, v.samples, v.radius, v.tolerance)
        if not rep.passed:
            self.failures.append(f"explicit-solution residual {rep.max_abs_relative:.3e} > {v.tolerance:g}")
        out = rep.as_dict()
        out["solution"] = expr.to_source(problem.solution)
        return out

    def property_check(self, problem=None):
        c = self.job.check
        summary = inequality_harness(c.trials, c.seed, c.dimensions)
        if summary.violations:
            self.failures.append(f"kernel inequality violated in {summary.violations} trials")
        return summary.as_dict()

    def run(self) -> dict:
        job = self.job
        self.out.mkdir(parents=True, exist_ok=True)
        report = {"job": job.echo(), "versions": versions()}
        exit_code = 0
        try:
            problem = self._timed("setup", lambda: build_problem(job))
            report["problem"] = {
                "potential": problem.potential.source,
                "nonlinearity": problem.nonlinearity.source,
            }
            if job.domain == "bounded":
                report["note"] = BOUNDED_NOTE
            handlers = {
                "classify": self.classify,
                "solve": self.solve,
                "verify-explicit": self.verify_explicit,
                "property-check": self.property_check,
            }
            for task in job.tasks:
                self.results[task] = self._timed(task, lambda t=task: handlers[t](problem))
        except BlowupLabError as exc:
            exit_code = exc.exit_code
            report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        if exit_code == 0 and self.failures:
            exit_code = 1
        report["results"] = self.results
        report["failures"] = self.failures
        report["warnings"] = self.warnings
        report["exit_code"] = exit_code
        report["timing"] = self.timing
        write_report(self.out / "report.json", report)
        return report


def versions() -> dict:
    return {
        "blowup_lab": VERSION,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(_finite(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path: Path, report: dict) -> None:
    Path(path).write_text(dumps_report(report))


def run_job(job_path, out_dir) -> int:
    try:
        job = load_job(job_path)
    except BlowupLabError as exc:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_report(out / "report.json", {
            "error": {"type": type(exc).__name__, "message": str(exc)},
            "exit_code": exc.exit_code, "versions": versions(), "timing": {},
        })
        return exc.exit_code
    return Runner(job, out_dir).run()["exit_code"]
