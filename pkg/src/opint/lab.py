"""Perturbation laboratory.

Exact operator-difference identity checks via triple integrals,
Lipschitz-type ratio sweeps over Schatten norms for p in [1, 2], and
exploratory trend scans for p > 2.

Trials are independent: each draws its random stream from the master
seed and its task index, so results do not depend on the thread count
or execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .besov import besov_norm, support_radius
from .errors import ValidationError
from .functions import (
    FunctionR2,
    catalog,
    divided_difference_first,
    divided_difference_second,
    parse_function_spec,
    random_bandlimited,
    sup_norm_interval,
)
from .integrals import f_of_pair_measures, triple_oi_first, triple_oi_second
from .spectral import (
    HermitianMatrix,
    as_hermitian,
    eigendecompose,
    from_spectrum,
    prescribed_perturbation,
    random_hermitian,
    schatten_norm,
    spectral_measure,
)

_TINY = np.finfo(np.float64).tiny


def _jsonable(x: float):
    """JSON numbers cannot hold inf/nan; encode those as strings, which
    float() parses back exactly."""
    return x if math.isfinite(x) else repr(x)


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityCheckReport:
    """Frobenius-norm comparison of the two sides of a difference identity."""

    kind: str  # "first" | "second" | "full"
    lhs_norm: float
    rhs_norm: float
    residual_norm: float
    relative_residual: float
    dim: int
    seed: int = -1
    f_id: str = "f"


def _report(kind, lhs, rhs, dim, seed, f_id) -> IdentityCheckReport:
    lhs_norm = float(np.linalg.norm(lhs))
    rhs_norm = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(lhs - rhs))
    return IdentityCheckReport(
        kind=kind,
        lhs_norm=lhs_norm,
        rhs_norm=rhs_norm,
        residual_norm=residual,
        relative_residual=residual / max(lhs_norm, _TINY),
        dim=dim,
        seed=seed,
        f_id=f_id,
    )


def _dd1(f: FunctionR2):
    return lambda x1, x2, y: divided_difference_first(f, x1, x2, y)


def _dd2(f: FunctionR2):
    return lambda x, y1, y2: divided_difference_second(f, x, y1, y2)


def difference_first_identity_check(
    f: FunctionR2, A1, A2, B, cluster_tol: float | None = None, seed: int = -1
) -> IdentityCheckReport:
    """Check f(A1,B) - f(A2,B) against the triple integral of the
    first-slot divided difference with A1 - A2 interposed.

    The identity is algebraically exact in finite dimensions, so the
    relative residual on gap-conditioned inputs is round-off-sized.
    """
    A1 = as_hermitian(A1)
    A2 = as_hermitian(A2)
    B = as_hermitian(B)
    EA1 = spectral_measure(A1, cluster_tol)
    EA2 = spectral_measure(A2, cluster_tol)
    EB = spectral_measure(B, cluster_tol)
    lhs = f_of_pair_measures(f, EA1, EB) - f_of_pair_measures(f, EA2, EB)
    rhs = triple_oi_first(_dd1(f), EA1, A1.entries - A2.entries, EA2, EB).value
    return _report("first", lhs, rhs, A1.dim, seed, f.label)


def difference_second_identity_check(
    f: FunctionR2, A, B1, B2, cluster_tol: float | None = None, seed: int = -1
) -> IdentityCheckReport:
    """Check f(A,B1) - f(A,B2) against the triple integral of the
    second-slot divided difference with B1 - B2 interposed."""
    A = as_hermitian(A)
    B1 = as_hermitian(B1)
    B2 = as_hermitian(B2)
    EA = spectral_measure(A, cluster_tol)
    EB1 = spectral_measure(B1, cluster_tol)
    EB2 = spectral_measure(B2, cluster_tol)
    lhs = f_of_pair_measures(f, EA, EB1) - f_of_pair_measures(f, EA, EB2)
    rhs = triple_oi_second(_dd2(f), EA, EB1, B1.entries - B2.entries, EB2).value
    return _report("second", lhs, rhs, A.dim, seed, f.label)


def full_difference_identity_check(
    f: FunctionR2, A1, A2, B1, B2, cluster_tol: float | None = None, seed: int = -1
) -> IdentityCheckReport:
    """Check f(A1,B1) - f(A2,B2) against the two-term triple-integral sum.

    The first term carries the measures of A1, A2 and B1; the second the
    measures of A2, B1 and B2 (note the mixed measures: the second term
    reuses E_{A2} and the first reuses E_{B1}).
    """
    A1 = as_hermitian(A1)
    A2 = as_hermitian(A2)
    B1 = as_hermitian(B1)
    B2 = as_hermitian(B2)
    EA1 = spectral_measure(A1, cluster_tol)
    EA2 = spectral_measure(A2, cluster_tol)
    EB1 = spectral_measure(B1, cluster_tol)
    EB2 = spectral_measure(B2, cluster_tol)
    lhs = f_of_pair_measures(f, EA1, EB1) - f_of_pair_measures(f, EA2, EB2)
    rhs = (
        triple_oi_first(_dd1(f), EA1, A1.entries - A2.entries, EA2, EB1).value
        + triple_oi_second(_dd2(f), EA2, EB1, B1.entries - B2.entries, EB2).value
    )
    return _report("full", lhs, rhs, A1.dim, seed, f.label)


# ---------------------------------------------------------------------------
# instance generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleSpec:
    """Random-matrix ensemble configuration for experiment sweeps."""

    kind: str = "gue"
    radius: float | None = None
    min_gap: float | None = None

    def sample(self, dim: int, rng) -> HermitianMatrix:
        return random_hermitian(
            dim, self.kind, min_gap=self.min_gap, seed=rng, radius=self.radius
        )

    def to_doc(self) -> dict:
        return {"kind": self.kind, "radius": self.radius, "min_gap": self.min_gap}

    @classmethod
    def from_doc(cls, doc: dict) -> "EnsembleSpec":
        if not isinstance(doc, dict):
            raise ValidationError("field 'ensemble' must be an object")
        kind = doc.get("kind", "gue")
        radius = doc.get("radius")
        min_gap = doc.get("min_gap")
        return cls(
            kind=str(kind),
            radius=None if radius is None else float(radius),
            min_gap=None if min_gap is None else float(min_gap),
        )


def _respace_away(values: np.ndarray, avoid: np.ndarray, delta: float, internal_gap: float) -> np.ndarray:
    """Push ascending values up until they keep internal_gap among
    themselves and distance delta from every avoid point."""
    out = values.astype(np.float64).copy()
    avoid = np.sort(avoid)
    # overshoot slightly so rounding of avoid + delta cannot leave the
    # candidate inside the exclusion band (which would loop forever)
    step = delta * (1 + 1e-7)
    for i in range(out.size):
        cand = out[i] if i == 0 else max(out[i], out[i - 1] + internal_gap)
        while True:
            close = avoid[np.abs(avoid - cand) < delta]
            if close.size == 0:
                break
            cand = float(close.max()) + step
        out[i] = cand
    return out


def separated_pair(
    dim: int,
    ensemble: EnsembleSpec,
    rng,
    pert_target: float,
    separation: float | None = None,
) -> tuple[HermitianMatrix, HermitianMatrix]:
    """A Hermitian matrix and a perturbed copy whose spectra stay apart.

    The copy's eigenvalues are respaced away from the base spectrum, so
    divided differences in identity checks never hit the coincident
    branch; exact collisions are produced separately by collision_pair.
    """
    H1 = ensemble.sample(dim, rng)
    pair = prescribed_perturbation(H1, 2, pert_target, rng)
    w1, _ = eigendecompose(H1)
    w2, V2 = eigendecompose(pair.perturbed)
    span = max(float(w1[-1] - w1[0]), 1.0)
    delta = separation if separation is not None else 1e-4 * span
    w2r = _respace_away(w2, w1, delta, internal_gap=delta)
    return H1, from_spectrum(w2r, V2)


def collision_pair(
    dim: int, ensemble: EnsembleSpec, rng
) -> tuple[HermitianMatrix, HermitianMatrix]:
    """Stress-mode pair with exact spectral collisions.

    Built diagonal in the standard basis (exact eigenvalue collisions
    survive eigendecomposition only there): the two matrices share every
    even-indexed spectral point bitwise, so divided differences hit the
    coincident-point derivative rule while odd-indexed pairs keep
    exercising the quotient."""
    H = ensemble.sample(dim, rng)
    w1, _ = eigendecompose(H)
    w2 = w1.copy()
    if dim > 1:
        step = 0.25 * float(np.diff(w1).min())
        w2[1::2] += max(step, 1e-8)
    return as_hermitian(np.diag(w1)), as_hermitian(np.diag(w2))


# ---------------------------------------------------------------------------
# experiment configuration and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One source of truth for a sweep; see from_doc for the file schema."""

    p: tuple[float, ...] = (2.0,)
    dims: tuple[int, ...] = (4, 8)
    trials: int = 10
    seed: int = 0
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    functions: tuple[FunctionR2, ...] = ()
    mode: str = "lipschitz"  # "identity" | "lipschitz" | "scan"
    pert_target: float = 0.1
    normalizer: str = "besov"  # "besov" | "bandlimit"
    checks: tuple[str, ...] = ("first", "second", "full")
    separation: float | None = None
    scan_refine: int = 4
    threads: int = 1

    def to_doc(self) -> dict:
        return {
            "p": [_jsonable(v) for v in self.p],
            "dims": list(self.dims),
            "trials": self.trials,
            "seed": self.seed,
            "ensemble": self.ensemble.to_doc(),
            "functions": [f.label for f in self.functions],
            "mode": self.mode,
            "pert_target": self.pert_target,
            "normalizer": self.normalizer,
            "checks": list(self.checks),
            "separation": self.separation,
            "scan_refine": self.scan_refine,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ExperimentConfig":
        """Parse {p: number|list, dims, trials, seed, ensemble: {kind,
        radius, min_gap}, functions: [catalog doc | shorthand string],
        mode, pert_target, normalizer, checks, separation, scan_refine}."""
        if not isinstance(doc, dict):
            raise ValidationError("experiment config must be an object")
        try:
            p_raw = doc.get("p", 2.0)
            ps = tuple(float(v) for v in (p_raw if isinstance(p_raw, (list, tuple)) else [p_raw]))
            dims = tuple(int(d) for d in doc.get("dims", [4, 8]))
            trials = int(doc.get("trials", 10))
            seed = int(doc.get("seed", 0))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"experiment config field malformed: {exc}") from exc
        if trials < 0:
            raise ValidationError("field 'trials' must be nonnegative")
        if any(d < 1 for d in dims):
            raise ValidationError("field 'dims' entries must be positive")
        fns = []
        for spec in doc.get("functions", []):
            fns.append(parse_function_spec(spec) if isinstance(spec, str) else catalog(spec))
        mode = str(doc.get("mode", "lipschitz"))
        if mode not in ("identity", "lipschitz", "scan"):
            raise ValidationError(f"field 'mode' must be identity|lipschitz|scan, got {mode!r}")
        normalizer = str(doc.get("normalizer", "besov"))
        if normalizer not in ("besov", "bandlimit"):
            raise ValidationError("field 'normalizer' must be 'besov' or 'bandlimit'")
        checks = tuple(doc.get("checks", ["first", "second", "full"]))
        for c in checks:
            if c not in ("first", "second", "full"):
                raise ValidationError(f"field 'checks' entry unknown: {c!r}")
        pert_target = float(doc.get("pert_target", 0.1))
        if not pert_target > 0:
            raise ValidationError("field 'pert_target' must be positive")
        separation = doc.get("separation")
        return cls(
            p=ps,
            dims=dims,
            trials=trials,
            seed=seed,
            ensemble=EnsembleSpec.from_doc(doc.get("ensemble", {})),
            functions=tuple(fns),
            mode=mode,
            pert_target=pert_target,
            normalizer=normalizer,
            checks=checks,
            separation=None if separation is None else float(separation),
            scan_refine=int(doc.get("scan_refine", 4)),
            threads=int(doc.get("threads", 1)),
        )


@dataclass(frozen=True)
class LipschitzTrial:
    """One perturbation trial: norms, ratio and its normalizer."""

    seed: int
    dim: int
    p: float
    sigma: float
    f_id: str
    diff_norm: float
    pert_norm: float
    ratio: float
    besov_norm_upper: float
    normalizer: float

    def to_doc(self) -> dict:
        return {
            "seed": self.seed,
            "dim": self.dim,
            "p": _jsonable(self.p),
            "sigma": self.sigma,
            "f_id": self.f_id,
            "diff_norm": self.diff_norm,
            "pert_norm": self.pert_norm,
            "ratio": self.ratio,
            "besov_norm_upper": self.besov_norm_upper,
            "normalizer": self.normalizer,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "LipschitzTrial":
        fields = {k: doc[k] for k in (
            "seed", "dim", "p", "sigma", "f_id", "diff_norm",
            "pert_norm", "ratio", "besov_norm_upper", "normalizer",
        )}
        fields["p"] = float(fields["p"])
        return cls(**fields)


@dataclass(frozen=True)
class ExperimentReport:
    """Trials plus the maximum normalized ratio, with the config echoed."""

    trials: tuple[LipschitzTrial, ...]
    empirical_constant: float
    config: dict
    seed: int
    skipped: int = 0
    trend: tuple[tuple[float, int, float], ...] | None = None  # (p, dim, max ratio)
    growth_flags: tuple[tuple[float, bool], ...] | None = None

    def to_doc(self) -> dict:
        return {
            "trials": [t.to_doc() for t in self.trials],
            "empirical_constant": _jsonable(self.empirical_constant),
            "config": self.config,
            "seed": self.seed,
            "skipped": self.skipped,
            "trend": None
            if self.trend is None
            else [[_jsonable(p), dim, _jsonable(mx)] for p, dim, mx in self.trend],
            "growth_flags": None
            if self.growth_flags is None
            else [[_jsonable(p), flag] for p, flag in self.growth_flags],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ExperimentReport":
        return cls(
            trials=tuple(LipschitzTrial.from_doc(t) for t in doc["trials"]),
            empirical_constant=float(doc["empirical_constant"]),
            config=doc["config"],
            seed=doc["seed"],
            skipped=doc.get("skipped", 0),
            trend=None
            if doc.get("trend") is None
            else tuple(
                (float(row[0]), int(row[1]), float(row[2])) for row in doc["trend"]
            ),
            growth_flags=None
            if doc.get("growth_flags") is None
            else tuple((float(row[0]), bool(row[1])) for row in doc["growth_flags"]),
        )


def empirical_constant_from_trials(trials) -> float:
    """Recompute max ratio / normalizer; 0 for an empty trial list."""
    best = 0.0
    for t in trials:
        if t.normalizer > 0:
            best = max(best, t.ratio / t.normalizer)
        elif t.ratio > 0:
            best = math.inf
    return best


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------


def _normalizer_value(f: FunctionR2, kind: str, cache: dict) -> tuple[float, float]:
    """(besov upper end, normalizer value) for a catalog function."""
    key = (f, kind)
    if key not in cache:
        besov_hi = besov_norm(f, "inhomogeneous").hi
        if kind == "besov":
            value = besov_hi
        else:  # "bandlimit": sigma * upper end of the sup-norm bracket
            value = support_radius(f) * sup_norm_interval(f).hi
        cache[key] = (besov_hi, value)
    return cache[key]


def _run_ratio_trial(
    p: float,
    dim: int,
    f: FunctionR2,
    index: int,
    config: ExperimentConfig,
    norm_cache: dict,
    target: float | None = None,
) -> LipschitzTrial | None:
    rng = np.random.default_rng([config.seed, index])
    target = config.pert_target if target is None else target
    A1 = config.ensemble.sample(dim, rng)
    B1 = config.ensemble.sample(dim, rng)
    pa = prescribed_perturbation(A1, p, target, rng)
    pb = prescribed_perturbation(B1, p, target, rng)
    pert_norm = max(pa.perturbation_norm, pb.perturbation_norm)
    if pert_norm == 0:
        return None
    FA = f_of_pair_measures(
        f, spectral_measure(A1), spectral_measure(B1)
    )
    FB = f_of_pair_measures(
        f, spectral_measure(pa.perturbed), spectral_measure(pb.perturbed)
    )
    diff_norm = schatten_norm(FA - FB, p)
    besov_hi, normalizer = _normalizer_value(f, config.normalizer, norm_cache)
    sigma = f.support_radius if f.support_radius is not None else -1.0
    return LipschitzTrial(
        seed=index,
        dim=dim,
        p=p,
        sigma=float(sigma),
        f_id=f.label,
        diff_norm=diff_norm,
        pert_norm=pert_norm,
        ratio=diff_norm / pert_norm,
        besov_norm_upper=besov_hi,
        normalizer=normalizer,
    )


def _run_tasks(tasks, worker, threads: int):
    """Execute tasks preserving order; thread count never changes results."""
    if threads <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, tasks))


def lipschitz_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Ratio sweep ||f(A1,B1) - f(A2,B2)||_p / max(||dA||_p, ||dB||_p).

    Requires p in [1, 2] (the regime where the ratio admits a uniform
    bound); use p_above_2_scan to explore beyond.  Deterministic for a
    fixed seed and any thread count.
    """
    for p in config.p:
        if not (1 <= p <= 2):
            raise ValidationError(
                f"lipschitz mode requires p in [1, 2], got {p:g}; use scan mode"
            )
    if not config.functions:
        raise ValidationError("experiment needs at least one catalog function")
    norm_cache: dict = {}
    tasks = []
    index = 0
    for p in config.p:
        for dim in config.dims:
            for f in config.functions:
                for _ in range(config.trials):
                    tasks.append((p, dim, f, index))
                    index += 1
    worker = lambda task: _run_ratio_trial(
        task[0], task[1], task[2], task[3], config, norm_cache
    )
    results = _run_tasks(tasks, worker, config.threads)
    trials = tuple(t for t in results if t is not None)
    return ExperimentReport(
        trials=trials,
        empirical_constant=empirical_constant_from_trials(trials),
        config=config.to_doc(),
        seed=config.seed,
        skipped=len(results) - len(trials),
    )


def p_above_2_scan(config: ExperimentConfig) -> ExperimentReport:
    """Trend scan of the same ratio statistic across dimensions.

    Intended for p > 2 and p = inf, where no uniform bound is expected;
    p in [1, 2] is accepted as a control.  For each (p, dim) the maximum
    normalized ratio over seeded restarts is refined greedily by
    rescaling the best restart's perturbation, and the per-dimension
    trend is emitted with a growth flag (log-log slope > 0.25).  No
    pass/fail is attached.
    """
    for p in config.p:
        if not p >= 1:
            raise ValidationError(f"scan requires p >= 1, got {p:g}")
    if not config.functions:
        raise ValidationError("experiment needs at least one catalog function")
    norm_cache: dict = {}
    tasks = []
    index = 0
    for p in config.p:
        for dim in config.dims:
            for f in config.functions:
                for _ in range(config.trials):
                    tasks.append((p, dim, f, index))
                    index += 1
    worker = lambda task: _run_ratio_trial(
        task[0], task[1], task[2], task[3], config, norm_cache
    )
    results = _run_tasks(tasks, worker, config.threads)
    trials = [t for t in results if t is not None]

    # greedy refinement: rescale the best restart per (p, dim)
    refine_scales = (0.25, 0.5, 2.0, 4.0)[: max(0, config.scan_refine)]
    refined: list[LipschitzTrial] = []
    for p in config.p:
        for dim in config.dims:
            group = [t for t in trials if t.p == p and t.dim == dim]
            if not group:
                continue
            best = max(group, key=lambda t: t.ratio / max(t.normalizer, _TINY))
            fmap = {f.label: f for f in config.functions}
            for c in refine_scales:
                extra = _run_ratio_trial(
                    p,
                    dim,
                    fmap[best.f_id],
                    best.seed,
                    config,
                    norm_cache,
                    target=config.pert_target * c,
                )
                if extra is not None:
                    refined.append(extra)
    all_trials = tuple(trials + refined)

    trend = []
    growth_flags = []
    for p in config.p:
        per_dim = []
        for dim in config.dims:
            group = [
                t.ratio / max(t.normalizer, _TINY)
                for t in all_trials
                if t.p == p and t.dim == dim
            ]
            if group:
                per_dim.append((dim, max(group)))
        trend.extend((p, dim, mx) for dim, mx in per_dim)
        if len(per_dim) >= 2 and all(mx > 0 for _, mx in per_dim):
            logd = np.log2([d for d, _ in per_dim])
            logm = np.log2([mx for _, mx in per_dim])
            slope = float(np.polyfit(logd, logm, 1)[0])
            growth_flags.append((p, slope > 0.25))
        else:
            growth_flags.append((p, False))

    return ExperimentReport(
        trials=all_trials,
        empirical_constant=empirical_constant_from_trials(all_trials),
        config=config.to_doc(),
        seed=config.seed,
        skipped=len(results) - len(trials),
        trend=tuple(trend),
        growth_flags=tuple(growth_flags),
    )


# ---------------------------------------------------------------------------
# identity suite runner
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentitySuiteReport:
    """All identity-check rows of a configured sweep."""

    checks: tuple[IdentityCheckReport, ...]
    max_relative_residual: float
    config: dict
    seed: int

    def to_doc(self) -> dict:
        return {
            "checks": [asdict(c) for c in self.checks],
            "max_relative_residual": self.max_relative_residual,
            "config": self.config,
            "seed": self.seed,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "IdentitySuiteReport":
        return cls(
            checks=tuple(IdentityCheckReport(**c) for c in doc["checks"]),
            max_relative_residual=doc["max_relative_residual"],
            config=doc["config"],
            seed=doc["seed"],
        )


def _identity_instance(dim, config: ExperimentConfig, index: int):
    rng = np.random.default_rng([config.seed, index])
    A1, A2 = separated_pair(
        dim, config.ensemble, rng, config.pert_target, config.separation
    )
    B1, B2 = separated_pair(
        dim, config.ensemble, rng, config.pert_target, config.separation
    )
    return A1, A2, B1, B2


def identity_experiment(config: ExperimentConfig) -> IdentitySuiteReport:
    """Run the configured identity checks over seeded random instances."""
    if not config.functions:
        raise ValidationError("experiment needs at least one catalog function")
    tasks = []
    index = 0
    for dim in config.dims:
        for f in config.functions:
            for _ in range(config.trials):
                tasks.append((dim, f, index))
                index += 1

    def worker(task):
        dim, f, i = task
        A1, A2, B1, B2 = _identity_instance(dim, config, i)
        rows = []
        if "first" in config.checks:
            rows.append(
                difference_first_identity_check(f, A1, A2, B1, seed=i)
            )
        if "second" in config.checks:
            rows.append(
                difference_second_identity_check(f, A1, B1, B2, seed=i)
            )
        if "full" in config.checks:
            rows.append(
                full_difference_identity_check(f, A1, A2, B1, B2, seed=i)
            )
        return rows

    grouped = _run_tasks(tasks, worker, config.threads)
    checks = tuple(row for rows in grouped for row in rows)
    worst = max((c.relative_residual for c in checks), default=0.0)
    return IdentitySuiteReport(
        checks=checks,
        max_relative_residual=worst,
        config=config.to_doc(),
        seed=config.seed,
    )


def standard_test_function(sigma: float, seed: int = 0) -> FunctionR2:
    """Deterministic catalog function with support radius sigma, for
    identity sweeps and experiments."""
    return random_bandlimited(sigma, n_modes=4, seed=seed)
