"""Dense Hermitian linear algebra.

Eigendecompositions, spectral measures with eigenvalue clustering,
Schatten norms from singular values, and seeded random operator and
perturbation generators.  Everything here is a pure function of its
inputs; the value types are immutable after construction and safe to
share across threads.

Scale assumptions: dense matrices up to a few hundred rows, so every
norm and decomposition goes through exact dense LAPACK calls rather
than iterative estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NumericalError, ValidationError

#: relative tolerance for accepting a matrix as Hermitian
HERMITICITY_RTOL = 1e-12

#: default eigenvalue clustering tolerance, relative to max(1, spectral radius)
DEFAULT_CLUSTER_TOL = 1e-8

#: default minimum spectral gap in generators, relative to the spectral range
DEFAULT_GAP_FRACTION = 1e-4

_TINY = np.finfo(np.float64).tiny


def _as_square_complex(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValidationError("matrix dimension must be at least 1")
    return a


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Dense complex self-adjoint matrix, the finite stand-in for a
    self-adjoint operator."""

    entries: np.ndarray

    def __post_init__(self):
        a = _as_square_complex(self.entries)
        scale = float(np.abs(a).max()) if a.size else 0.0
        if scale > 0:
            dev = np.abs(a - a.conj().T)
            worst = float(dev.max())
            if worst > HERMITICITY_RTOL * scale:
                j, k = np.unravel_index(int(dev.argmax()), dev.shape)
                raise ValidationError(
                    f"matrix is not Hermitian: entry ({j},{k}) = {a[j, k]:.9g} but "
                    f"conj of entry ({k},{j}) = {np.conj(a[k, j]):.9g}"
                )
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def as_hermitian(m) -> HermitianMatrix:
    """Coerce an array-like (or pass through a HermitianMatrix), validating."""
    if isinstance(m, HermitianMatrix):
        return m
    return HermitianMatrix(np.asarray(m))


@dataclass(frozen=True)
class SchattenIndex:
    """Index p of a Schatten-von Neumann norm; p = inf is the operator norm."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1:
            raise ValidationError(f"Schatten index must satisfy p >= 1, got {p}")
        object.__setattr__(self, "p", p)

    @property
    def is_operator_norm(self) -> bool:
        return math.isinf(self.p)


def _schatten_p(p) -> float:
    if isinstance(p, SchattenIndex):
        return p.p
    return SchattenIndex(float(p)).p


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """Clustered eigenvalues with their orthogonal spectral projections.

    ``points`` is strictly increasing; ``projections[i]`` is the
    orthogonal projection onto the eigenspace cluster at ``points[i]``.
    ``basis``/``index_map`` (optional) carry an orthonormal eigenbasis
    with its column-to-cluster map; they are derived from the
    projections when absent.
    """

    points: np.ndarray
    projections: tuple
    basis: np.ndarray | None = field(default=None, repr=False)
    index_map: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.size == 0:
            raise ValidationError("spectral points must be a nonempty 1-d array")
        if np.any(np.diff(pts) <= 0):
            raise ValidationError("spectral points must be strictly increasing")
        projs = tuple(np.asarray(P, dtype=np.complex128) for P in self.projections)
        if len(projs) != pts.size:
            raise ValidationError(
                f"{pts.size} points but {len(projs)} projections"
            )
        d = projs[0].shape[0]
        for P in projs:
            if P.shape != (d, d):
                raise ValidationError("projections must share one square shape")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "projections", projs)

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    @property
    def npoints(self) -> int:
        return self.points.size

    @cached_property
    def eigenbasis(self) -> tuple[np.ndarray, np.ndarray]:
        """Orthonormal basis (columns) grouped by cluster, with the
        per-column cluster index.  Any orthonormal basis of each
        projection range gives the same operator integrals."""
        if self.basis is not None and self.index_map is not None:
            return self.basis, self.index_map
        cols = []
        idx = []
        for i, P in enumerate(self.projections):
            w, V = np.linalg.eigh(P)
            keep = w > 0.5
            cols.append(V[:, keep])
            idx.extend([i] * int(keep.sum()))
        U = np.hstack(cols)
        if U.shape[1] != self.dim:
            raise ValidationError(
                "projection ranks do not add up to the space dimension"
            )
        return U, np.asarray(idx, dtype=np.intp)

    def reconstruct(self) -> np.ndarray:
        """Sum of points[i] * projections[i]."""
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for lam, P in zip(self.points, self.projections):
            out += lam * P
        return out

    def validate(self, tol: float = 1e-10, source: np.ndarray | None = None) -> None:
        """Check the full projection algebra; raise ValidationError on failure.

        Verifies self-adjointness, idempotence, mutual orthogonality and
        completeness of the projections, and (when ``source`` is given)
        reconstruction of the source matrix.
        """
        d = self.dim
        eye = np.eye(d)
        total = np.zeros((d, d), dtype=np.complex128)
        for i, P in enumerate(self.projections):
            if np.abs(P - P.conj().T).max() > tol:
                raise ValidationError(f"projection {i} is not self-adjoint")
            if np.abs(P @ P - P).max() > tol:
                raise ValidationError(f"projection {i} is not idempotent")
            total += P
        for i in range(len(self.projections)):
            for j in range(i + 1, len(self.projections)):
                prod = self.projections[i] @ self.projections[j]
                if np.abs(prod).max() > tol:
                    raise ValidationError(f"projections {i}, {j} are not orthogonal")
        if np.abs(total - eye).max() > tol:
            raise ValidationError("projections do not sum to the identity")
        if source is not None:
            rho = max(abs(float(self.points[0])), abs(float(self.points[-1])))
            resid = np.abs(self.reconstruct() - source).max()
            if resid > tol * max(rho, 1e-30):
                raise ValidationError(
                    f"reconstruction residual {resid:.3g} exceeds {tol:.1g} * radius"
                )


def eigendecompose(H) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and a unitary of eigenvectors of a
    Hermitian matrix.

    Raises ValidationError for non-Hermitian input (naming the offending
    entry pair) and NumericalError if the backend fails to converge.
    """
    Hm = as_hermitian(H)
    try:
        w, V = np.linalg.eigh(Hm.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigendecomposition of a {Hm.dim}x{Hm.dim} matrix did not "
            f"converge (backend says: {exc})"
        ) from exc
    return w, V


def from_spectrum(eigenvalues, eigenvectors) -> HermitianMatrix:
    """Assemble V diag(w) V* as a HermitianMatrix."""
    w = np.asarray(eigenvalues, dtype=np.float64)
    V = np.asarray(eigenvectors, dtype=np.complex128)
    H = (V * w) @ V.conj().T
    return HermitianMatrix((H + H.conj().T) / 2)


def spectral_measure(H, cluster_tol: float | None = None) -> SpectralMeasure:
    """Spectral measure of a Hermitian matrix with eigenvalue clustering.

    Eigenvalues whose consecutive gap is at most
    ``cluster_tol * max(1, spectral radius)`` are merged into a single
    point (multiplicity-weighted mean) with the summed projection.  The
    default tolerance separates genuine degeneracy from round-off while
    keeping divided differences stable.
    """
    if cluster_tol is None:
        cluster_tol = DEFAULT_CLUSTER_TOL
    if cluster_tol < 0:
        raise ValidationError("cluster_tol must be nonnegative")
    w, V = eigendecompose(H)
    rho = max(abs(float(w[0])), abs(float(w[-1])))
    thresh = cluster_tol * max(1.0, rho)

    starts = [0]
    for i in range(1, w.size):
        if w[i] - w[i - 1] > thresh:
            starts.append(i)
    starts.append(w.size)

    points = []
    projections = []
    index_map = np.empty(w.size, dtype=np.intp)
    for c, (a, b) in enumerate(zip(starts[:-1], starts[1:])):
        block = V[:, a:b]
        P = block @ block.conj().T
        projections.append((P + P.conj().T) / 2)
        points.append(float(np.mean(w[a:b])))
        index_map[a:b] = c
    return SpectralMeasure(
        np.asarray(points), tuple(projections), basis=V, index_map=index_map
    )


def schatten_norm(M, p) -> float:
    """(sum sigma_i^p)^(1/p) over singular values; max sigma_i for p = inf."""
    pv = _schatten_p(p)
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim != 2:
        raise ValidationError(f"expected a matrix, got ndim={A.ndim}")
    if A.size == 0:
        return 0.0
    s = np.linalg.svd(A, compute_uv=False)
    smax = float(s[0])
    if math.isinf(pv) or smax == 0.0:
        return smax
    # factor out the top singular value so large p cannot overflow
    return smax * float(np.sum((s / smax) ** pv)) ** (1.0 / pv)


def _haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _respace(w: np.ndarray, gap: float) -> np.ndarray:
    """Push ascending eigenvalues apart to enforce a minimum gap,
    preserving the mean."""
    out = w.astype(np.float64).copy()
    for i in range(1, out.size):
        if out[i] - out[i - 1] < gap:
            out[i] = out[i - 1] + gap
    out += float(np.mean(w) - np.mean(out))
    return out


def random_hermitian(
    dim: int,
    ensemble: str = "gue",
    *,
    min_gap: float | None = None,
    seed=0,
    radius: float | None = None,
) -> HermitianMatrix:
    """Seeded random Hermitian matrix.

    ensemble "gue": Gaussian unitary ensemble, H = (G + G*)/2 with G a
    standard complex Gaussian matrix.  ensemble "spread-spectrum":
    eigenvalues uniform in [-radius, radius] with Haar-random
    eigenvectors; large radii model operators whose spectra dwarf any
    fixed bound.

    min_gap enforces a minimum eigenvalue gap (respacing for gue; a
    gap-reserving order-statistics draw for spread-spectrum).  None
    selects the default fraction of the spectral range; pass 0 to
    disable.  Deterministic for a fixed integer seed.
    """
    if dim < 1:
        raise ValidationError("dim must be at least 1")
    if min_gap is not None and min_gap < 0:
        raise ValidationError("min_gap must be nonnegative")
    kind = ensemble.replace("_", "-").lower()
    rng = _as_rng(seed)

    if kind == "gue":
        G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        H = (G + G.conj().T) / 2
        w, V = np.linalg.eigh(H)
        gap = (
            DEFAULT_GAP_FRACTION * float(w[-1] - w[0]) if min_gap is None else min_gap
        )
        if gap > 0 and dim > 1 and np.any(np.diff(w) < gap):
            return from_spectrum(_respace(w, gap), V)
        return HermitianMatrix((H + H.conj().T) / 2)

    if kind == "spread-spectrum":
        if radius is None or radius <= 0:
            raise ValidationError("spread-spectrum ensemble needs radius > 0")
        gap = DEFAULT_GAP_FRACTION * 2 * radius if min_gap is None else min_gap
        span = 2 * radius - (dim - 1) * gap
        if span < 0:
            raise ValidationError(
                f"min_gap {gap:g} is infeasible for dim {dim} in "
                f"[-{radius:g}, {radius:g}]"
            )
        u = np.sort(rng.uniform(-radius, -radius + span, size=dim))
        w = u + gap * np.arange(dim)
        V = _haar_unitary(rng, dim)
        return from_spectrum(w, V)

    raise ValidationError(
        f"unknown ensemble {ensemble!r}; expected 'gue' or 'spread-spectrum'"
    )


@dataclass(frozen=True, eq=False)
class PerturbedPair:
    """A Hermitian matrix together with a perturbed copy at a recorded
    Schatten-p distance."""

    base: HermitianMatrix
    perturbed: HermitianMatrix
    perturbation_norm: float
    p: SchattenIndex

    def __post_init__(self):
        if self.base.dim != self.perturbed.dim:
            raise ValidationError("base and perturbed dimensions differ")
        if self.perturbation_norm < 0:
            raise ValidationError("perturbation_norm must be nonnegative")
        actual = schatten_norm(self.difference, self.p)
        tol = 1e-10 * max(self.perturbation_norm, _TINY)
        if abs(actual - self.perturbation_norm) > tol:
            raise ValidationError(
                f"recorded perturbation norm {self.perturbation_norm:.17g} "
                f"disagrees with the actual S_{self.p.p:g} distance {actual:.17g}"
            )

    @property
    def difference(self) -> np.ndarray:
        return self.perturbed.entries - self.base.entries


def prescribed_perturbation(H, p, target: float, seed=0) -> PerturbedPair:
    """Perturb H by a random Hermitian direction rescaled to a prescribed
    Schatten-p norm.

    The generated direction D satisfies schatten_norm(D, p) = target to
    within rescaling round-off; the recorded perturbation_norm is the
    recomputed norm of the actual matrix difference, so the pair
    invariant holds even when H dwarfs the perturbation.
    """
    Hm = as_hermitian(H)
    pv = _schatten_p(p)
    if not (target > 0):
        raise ValidationError("perturbation target must be positive")
    rng = _as_rng(seed)
    G = rng.standard_normal((Hm.dim, Hm.dim)) + 1j * rng.standard_normal(
        (Hm.dim, Hm.dim)
    )
    D = (G + G.conj().T) / 2
    D *= target / schatten_norm(D, pv)
    perturbed = as_hermitian(Hm.entries + D)
    return PerturbedPair(
        base=Hm,
        perturbed=perturbed,
        perturbation_norm=schatten_norm(perturbed.entries - Hm.entries, pv),
        p=SchattenIndex(pv),
    )


def hermitian_to_doc(H) -> dict:
    """Matrix exchange document: {dim, entries: row-major [re, im] pairs}."""
    Hm = as_hermitian(H)
    flat = Hm.entries.reshape(-1)
    return {
        "dim": Hm.dim,
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def hermitian_from_doc(doc: dict) -> HermitianMatrix:
    """Read the matrix exchange document produced by hermitian_to_doc."""
    try:
        dim = int(doc["dim"])
        entries = doc["entries"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"matrix document missing field: {exc}") from exc
    if len(entries) != dim * dim:
        raise ValidationError(
            f"matrix document: expected {dim * dim} entries, got {len(entries)}"
        )
    flat = np.array([complex(re, im) for re, im in entries], dtype=np.complex128)
    return as_hermitian(flat.reshape(dim, dim))
