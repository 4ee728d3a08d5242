"""Seeded Monte-Carlo harnesses.

Every trial draws its randomness from its own generator, seeded from
``(seed, n, m, d, theta, local trial index)``, so results do not depend on
how trials are distributed over worker processes.  Records are always
returned sorted by ``trial_index``.
"""

from __future__ import annotations

import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy.stats import binomtest

from .faces import (
    FaceReport,
    SupportPattern,
    check_extreme_inequality,
    is_vertex,
    minimal_face_dimension,
    subdifferential_dimension_estimate,
)
from .formats import FormatError, format_float, parse_config, read_matrix, read_text
from .linalg import DEFAULT_TOL, as_matrix, numerical_rank, svd
from .solvers import LinearMap, SolverConfig, extreme_point_refine, minimize_linear_over_ball, solve_affine_recovery

log = logging.getLogger(__name__)

SWEEP_SOLVER = SolverConfig(max_iter=5000, abs_tol=1e-7, rel_tol=1e-6)
# second attempt for sweep trials whose first solve or refinement did not converge
RETRY_SOLVER = SolverConfig(max_iter=20000, abs_tol=1e-10, rel_tol=1e-9)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment.

    ``n``, ``m``, ``d`` and ``theta`` are tuples so that a sweep can run
    over a grid; grid cells with ``d > n*m`` are skipped.
    """

    n: tuple = (2,)
    m: tuple = (2,)
    d: tuple = (1,)
    theta: tuple = (1.0,)
    trials: int = 100
    seed: int = 0
    pattern: SupportPattern | None = None
    solver: SolverConfig = field(default_factory=lambda: SWEEP_SOLVER)
    samples: int = 0
    threshold: float = 0.005
    refine: str = "face"
    use_range_rank: bool = True
    inject: bool = True

    def __post_init__(self):
        for name in ("n", "m", "d", "theta"):
            value = getattr(self, name)
            if np.isscalar(value):
                object.__setattr__(self, name, (value,))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if min(self.n) < 1 or min(self.m) < 1:
            raise ValueError("matrix shape must be positive")
        if min(self.d) < 0:
            raise ValueError("d must be non-negative")
        if min(self.theta) <= 0:
            raise ValueError("theta must be positive")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        if self.refine not in ("face", "dr"):
            raise ValueError(f"unknown refine method {self.refine!r}")

    def cells(self):
        """Grid cells ``(n, m, d, theta)`` in a fixed order."""
        out = []
        for n in self.n:
            for m in self.m:
                for d in self.d:
                    if d > n * m:
                        continue
                    for theta in self.theta:
                        out.append((int(n), int(m), int(d), float(theta)))
        return out


@dataclass
class TrialRecord:
    trial_index: int
    seed_used: int
    n: int
    m: int
    d: int
    theta: float
    rank: int = 0
    zero_count: int = 0
    face_dim: int = 0
    inequality_ok: bool = True
    is_rank_one: bool = False
    support_match: bool = False
    support_equal: bool = False
    objective: float = 0.0
    converged: bool = True
    range_rank: int = 0
    iterations: int = 0
    residual: float = 0.0
    attempts: int = 1
    subdiff_dim: int = -1
    flagged_vertex: bool = False
    single_entry: bool = False
    injected: bool = False


def trial_seed(seed, n, m, d, theta, index):
    """64-bit seed of one trial; also stored in the record as ``seed_used``."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), n, m, d, int(round(theta * 1e6)), index])
    return int(ss.generate_state(1, np.uint64)[0])


def _tasks(cfg):
    tasks = []
    k = 0
    for n, m, d, theta in cfg.cells():
        for i in range(cfg.trials):
            tasks.append((k, trial_seed(cfg.seed, n, m, d, theta, i), n, m, d, theta))
            k += 1
    return tasks


def _run_parallel(fn, cfg, tasks, threads):
    threads = threads or os.cpu_count() or 1
    if threads <= 1 or len(tasks) < 2:
        records = [fn(cfg, t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (threads * 8))
        with ProcessPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(fn, [cfg] * len(tasks), tasks, chunksize=chunk))
    records.sort(key=lambda r: r.trial_index)
    return records


# --------------------------------------------------------------------------
# extreme-point inequality


def planted_matrix(rng, n, m, density=0.6):
    """Random sparse matrix of rank at most two, built from sparse factors."""
    k = int(rng.integers(1, 3))
    X = np.zeros((n, m))
    for _ in range(k):
        u = rng.standard_normal(n) * (rng.random(n) < density)
        v = rng.standard_normal(m) * (rng.random(m) < density)
        if not u.any():
            u[rng.integers(n)] = rng.standard_normal()
        if not v.any():
            v[rng.integers(m)] = rng.standard_normal()
        X += np.outer(u, v)
    return X


def _sweep_trial(cfg, task):
    index, s, n, m, d, theta = task
    rng = np.random.default_rng(s)
    rec = TrialRecord(trial_index=index, seed_used=s, n=n, m=m, d=d, theta=theta)
    ops = rng.standard_normal((d, n, m))
    X0 = planted_matrix(rng, n, m)
    W = rng.standard_normal((n, m))
    A = LinearMap(list(ops), ops.reshape(d, n * m) @ X0.ravel(), shape=(n, m))
    rec.range_rank = A.range_rank
    for attempt, solver in enumerate((cfg.solver, RETRY_SOLVER), start=1):
        res = solve_affine_recovery(A, theta, solver)
        ref = extreme_point_refine(
            A, theta, res.objective, W, solver, start=res.X, method=cfg.refine, hint=res.info.get("hint")
        )
        rec.attempts = attempt
        if res.converged and ref.converged:
            break
    rep = minimal_face_dimension(ref.X, theta)
    rec.rank = rep.rank
    rec.zero_count = rep.zero_count
    rec.face_dim = rep.face_dim
    rec.objective = ref.objective
    rec.iterations = res.iterations + ref.iterations
    rec.residual = ref.primal_residual
    rec.converged = bool(res.converged and ref.converged)
    rec.is_rank_one = rep.rank == 1
    bound = A.range_rank if cfg.use_range_rank else d
    rec.inequality_ok = bool(check_extreme_inequality(rep, bound))
    return rec


def inequality_sweep(cfg, threads=1):
    """Plant, recover, refine to an extreme point and certify, per trial."""
    return _run_parallel(_sweep_trial, cfg, _tasks(cfg), threads)


def sweep_summary(records):
    conv = [r for r in records if r.converged]
    return {
        "trials": len(records),
        "converged": len(conv),
        "converged_fraction": len(conv) / len(records) if records else 0.0,
        "violations": sum(1 for r in conv if not r.inequality_ok),
        "unconverged": len(records) - len(conv),
    }


# --------------------------------------------------------------------------
# rank-one recovery


def block_pattern(n, m, rows, cols):
    """Pattern whose support is the block ``rows x cols``."""
    support = np.zeros((n, m), dtype=bool)
    support[np.ix_(list(rows), list(cols))] = True
    return SupportPattern.from_support(support)


def validate_block_pattern(pattern):
    """Raise unless the support is a nonempty ``rows x cols`` block (after permutation)."""
    support = pattern.support
    rows = support.any(axis=1)
    cols = support.any(axis=0)
    if not rows.any():
        raise ValueError("pattern has empty support")
    if not np.array_equal(support, np.outer(rows, cols)):
        raise ValueError("pattern support is not a p x q block up to row/column permutation")
    return int(rows.sum()), int(cols.sum())


def wilson_interval(successes, trials, level=0.95):
    if trials == 0:
        return 0.0, 1.0
    ci = binomtest(successes, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def _recovery_trial(cfg, task):
    index, s, n, m, d, theta = task
    rng = np.random.default_rng(s)
    rec = TrialRecord(trial_index=index, seed_used=s, n=n, m=m, d=d, theta=theta)
    V = rng.standard_normal((n, m))
    res = minimize_linear_over_ball(V, theta, cfg.solver, method="gauge")
    X = res.X
    rec.objective = res.objective
    rec.iterations = res.iterations
    rec.converged = res.converged
    sig = np.linalg.svd(X, compute_uv=False)
    rec.rank = numerical_rank(sig, DEFAULT_TOL)
    zero = np.abs(X) <= DEFAULT_TOL.zero_abs
    rec.zero_count = int(zero.sum())
    pzero = cfg.pattern.zero_mask
    rec.is_rank_one = rec.rank == 1
    rec.support_match = bool(np.all(zero[pzero]))
    rec.support_equal = bool(np.array_equal(zero, pzero))
    return rec


def recovery_probability(cfg, threads=1):
    """Fraction of Gaussian ``V`` whose minimizer over the ball is rank one
    with support inside the block pattern, with a Wilson 95% interval.

    Unconverged trials stay in the denominator and count as failures.
    """
    if cfg.pattern is None:
        raise ValueError("recovery experiments need a pattern")
    validate_block_pattern(cfg.pattern)
    n, m = cfg.pattern.zero_mask.shape
    cfg = replace(cfg, n=(n,), m=(m,), d=(0,))
    records = _run_parallel(_recovery_trial, cfg, _tasks(cfg), threads)
    hits = sum(1 for r in records if r.converged and r.is_rank_one and r.support_match)
    low, high = wilson_interval(hits, len(records))
    return {
        "fraction": hits / len(records),
        "successes": hits,
        "trials": len(records),
        "unconverged": sum(1 for r in records if not r.converged),
        "ci_low": low,
        "ci_high": high,
        "threshold": cfg.threshold,
        "passed": hits / len(records) >= cfg.threshold and low > 0,
        "records": records,
    }


# --------------------------------------------------------------------------
# submersion condition


def submersion_check(Y, X, tol=1e-6):
    """``|<Y v, u> + 1| > tol`` for the top singular pair ``(u, v)`` of ``X``.

    ``X`` must have ``sigma_1 = 1`` (to ``1e-9``) and ``sigma_1 - sigma_2 > tol``.
    """
    X = as_matrix(X)
    Y = as_matrix(Y, "Y")
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch {Y.shape} vs {X.shape}")
    f = svd(X)
    s = f.sigma
    if abs(s[0] - 1.0) > 1e-9:
        raise ValueError(f"sigma_1(X) must be 1, got {s[0]!r}")
    if s.size > 1 and s[0] - s[1] <= tol:
        raise ValueError("top singular value of X is not simple")
    u, v = f.U[:, 0], f.V[:, 0]
    return bool(abs(u @ Y @ v + 1.0) > tol)


def random_submersion_pair(rng, n, m, tol=1e-6):
    """Gaussian ``Y`` and ``X`` rescaled to ``sigma_1 = 1`` with a simple top value."""
    while True:
        X = rng.standard_normal((n, m))
        s = np.linalg.svd(X, compute_uv=False)
        X = X / s[0]
        if s.size == 1 or (s[0] - s[1]) / s[0] > tol:
            return rng.standard_normal((n, m)), X


# --------------------------------------------------------------------------
# vertex scan


def injected_candidates(n, m, theta):
    """All ``+-E_ij / (1 + theta)``, a scaled identity and a few non-vertices."""
    out = []
    for i in range(n):
        for j in range(m):
            for sgn in (1.0, -1.0):
                E = np.zeros((n, m))
                E[i, j] = sgn / (1.0 + theta)
                out.append(E)
    k = min(n, m)
    eye = np.eye(n, m)
    out.append(eye / (k + theta * k))
    ones = np.ones((n, m))
    out.append(ones / (n * m + theta * np.sqrt(n * m)))
    if m > 1:
        R = np.zeros((n, m))
        R[0, :2] = 1.0
        out.append(R / (2 + theta * np.sqrt(2)))
    return out


def _vertex_trial(cfg, task):
    index, s, n, m, d, theta, X = task
    rng = np.random.default_rng(s)
    rec = TrialRecord(trial_index=index, seed_used=s, n=n, m=m, d=0, theta=theta)
    rec.injected = X is not None
    if X is None:
        X = rng.standard_normal((n, m))
    samples = cfg.samples or max(64, 4 * n * m)
    rec.subdiff_dim = subdifferential_dimension_estimate(X, theta, samples=samples, seed=s)
    rec.flagged_vertex = rec.subdiff_dim == n * m - 1
    rec.single_entry = is_vertex(X, theta)
    rep = minimal_face_dimension(X, theta)
    rec.rank = rep.rank
    rec.zero_count = rep.zero_count
    rec.face_dim = rep.face_dim
    rec.objective = rep.norm_value
    return rec


def vertex_scan(cfg, threads=1):
    """Random boundary points plus injected candidates; flags full-dimensional
    subdifferentials and compares them against the single-entry pattern."""
    tasks = []
    k = 0
    for n, m, d, theta in cfg.cells():
        for i in range(cfg.trials):
            tasks.append((k, trial_seed(cfg.seed, n, m, 0, theta, i), n, m, 0, theta, None))
            k += 1
        if cfg.inject:
            for j, X in enumerate(injected_candidates(n, m, theta)):
                s = trial_seed(cfg.seed, n, m, 0, theta, cfg.trials + j)
                tasks.append((k, s, n, m, 0, theta, X))
                k += 1
    records = _run_parallel(_vertex_trial, cfg, tasks, threads)
    mismatches = [r for r in records if r.flagged_vertex != r.single_entry]
    return {
        "records": records,
        "hits": [r for r in records if r.flagged_vertex],
        "mismatches": mismatches,
        "passed": not mismatches,
    }


# --------------------------------------------------------------------------
# config files and CSV output

SWEEP_COLUMNS = (
    "trial_index", "seed_used", "n", "m", "d", "theta", "range_rank", "rank", "zero_count",
    "face_dim", "inequality_ok", "objective", "iterations", "residual", "attempts", "converged",
)
RECOVERY_COLUMNS = (
    "trial_index", "seed_used", "n", "m", "theta", "rank", "zero_count", "is_rank_one",
    "support_match", "support_equal", "objective", "iterations", "converged",
)
VERTEX_COLUMNS = (
    "trial_index", "seed_used", "n", "m", "theta", "injected", "rank", "zero_count",
    "face_dim", "subdiff_dim", "flagged_vertex", "single_entry", "objective",
)
COLUMNS = {"sweep": SWEEP_COLUMNS, "recovery": RECOVERY_COLUMNS, "vertex-scan": VERTEX_COLUMNS}


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(int(value))


def records_to_csv(records, columns):
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in records:
        row = asdict(r)
        buf.write(",".join(_cell(row[c]) for c in columns) + "\n")
    return buf.getvalue()


_RECORD_FIELDS = {f.name for f in fields(TrialRecord)}


def _int_list(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = part.split(":", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _float_list(text):
    return tuple(float(p) for p in text.split(","))


_SOLVER_KEYS = {"max_iter": int, "abs_tol": float, "rel_tol": float, "rho": float, "seed": int}


def load_config(path, kind):
    """Build an :class:`ExperimentConfig` from a ``key=value`` file.

    Keys: ``n, m, d`` (integers; comma lists and ``lo:hi`` ranges form a
    grid), ``theta`` (comma list), ``trials``, ``seed``, ``pattern_file``
    (matrix text, nonzero = support), ``samples``, ``threshold``,
    ``refine``, ``use_range_rank`` and ``solver.<field>``.
    """
    source = str(path)
    raw = parse_config(read_text(path), source)
    kw = {}
    solver = {}
    for key, (value, lineno) in raw.items():
        try:
            if key in ("n", "m", "d"):
                kw[key] = _int_list(value)
            elif key == "theta":
                kw["theta"] = _float_list(value)
            elif key in ("trials", "seed", "samples"):
                kw[key] = int(value)
            elif key == "threshold":
                kw["threshold"] = float(value)
            elif key == "refine":
                kw["refine"] = value
            elif key in ("use_range_rank", "inject"):
                if value.lower() not in ("true", "false"):
                    raise ValueError(f"expected true/false, got {value!r}")
                kw[key] = value.lower() == "true"
            elif key == "pattern_file":
                pfile = value
                if not os.path.isabs(pfile):
                    pfile = os.path.join(os.path.dirname(os.path.abspath(source)), pfile)
                P = read_matrix(pfile)
                kw["pattern"] = SupportPattern(zero_mask=P == 0)
            elif key.startswith("solver.") and key[7:] in _SOLVER_KEYS:
                solver[key[7:]] = _SOLVER_KEYS[key[7:]](value)
            else:
                raise ValueError(f"unknown key {key!r}")
        except FormatError:
            raise
        except (ValueError, OSError) as exc:
            raise FormatError(source, lineno, 1, str(exc)) from None
    if solver:
        kw["solver"] = replace(SWEEP_SOLVER, **solver)
    if kind == "recovery" and "pattern" not in kw:
        raise FormatError(source, 1, 1, "recovery experiments need pattern_file")
    if kind == "recovery":
        n, m = kw["pattern"].zero_mask.shape
        kw.setdefault("n", (n,))
        kw.setdefault("m", (m,))
        if kw["n"] != (n,) or kw["m"] != (m,):
            raise FormatError(source, 1, 1, f"pattern shape {n}x{m} disagrees with n, m")
    try:
        return ExperimentConfig(**kw)
    except ValueError as exc:
        raise FormatError(source, 1, 1, str(exc)) from None


__all__ = [
    "ExperimentConfig",
    "FaceReport",
    "TrialRecord",
    "block_pattern",
    "inequality_sweep",
    "injected_candidates",
    "load_config",
    "planted_matrix",
    "random_submersion_pair",
    "records_to_csv",
    "recovery_probability",
    "submersion_check",
    "sweep_summary",
    "trial_seed",
    "validate_block_pattern",
    "vertex_scan",
    "wilson_interval",
]
