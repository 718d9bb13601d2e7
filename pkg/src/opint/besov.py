"""Dyadic frequency decomposition and Besov-type norms.

Piecewise-linear dyadic windows form an exact partition of unity on the
frequency half-line, so decomposing a catalog function is exact
arithmetic on its mode coefficients.  Norms are interval-valued because
block sup-norms are only bracketed; see ``opint.interval``.

Sampled (non-catalog) functions go through a documented FFT grid that
reconstructs an on-grid trigonometric interpolant, with an explicit
aliasing check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, ValidationError
from .functions import FunctionR2, sup_norm_interval, trig_poly
from .interval import Interval

_FLAVORS = ("inhomogeneous", "homogeneous")

#: default sample count per axis for block sup-norm brackets
BLOCK_SUP_SAMPLES = 1024

#: defaults for the sampled-grid path
SAMPLED_GRID = 1024
SAMPLED_FREQ_LO = 1.0
ALIASING_LIMIT = 1e-8


class LPWindowFamily:
    """Dyadic window family w_n(r) on r >= 0.

    Inhomogeneous flavor: w_0 is 1 on [0, 1] and falls linearly to 0 at
    2; for n >= 1, w_n is the tent on [2^(n-1), 2^(n+1)] peaking at 2^n.
    Homogeneous flavor: tents for every integer n (including n <= 0).
    Either family sums to 1 pointwise (for r > 0 in the homogeneous
    case) with at most two windows active at any radius.
    """

    def __init__(self, flavor: str = "inhomogeneous"):
        if flavor not in _FLAVORS:
            raise ValidationError(
                f"unknown flavor {flavor!r}; expected one of {_FLAVORS}"
            )
        self.flavor = flavor

    def weight(self, n: int, r):
        r = np.asarray(r, dtype=np.float64)
        if self.flavor == "inhomogeneous":
            if n < 0:
                raise ValidationError("inhomogeneous windows are indexed by n >= 0")
            if n == 0:
                out = np.interp(r, [1.0, 2.0], [1.0, 0.0], left=1.0, right=0.0)
                return out if out.ndim else float(out)
        mid = math.ldexp(1.0, n)  # 2^n
        out = np.interp(r, [mid / 2, mid, 2 * mid], [0.0, 1.0, 0.0], left=0.0, right=0.0)
        return out if out.ndim else float(out)

    def active(self, r: float) -> list[tuple[int, float]]:
        """Windows with nonzero weight at radius r, as (n, weight) pairs."""
        r = float(r)
        if r < 0:
            raise ValidationError("radius must be nonnegative")
        if r == 0:
            return [(0, 1.0)] if self.flavor == "inhomogeneous" else []
        base = math.floor(math.log2(r))
        candidates = {base - 1, base, base + 1}
        if self.flavor == "inhomogeneous":
            candidates = {n for n in candidates if n >= 1} | {0}
        out = [(n, float(self.weight(n, r))) for n in sorted(candidates)]
        return [(n, w) for n, w in out if w > 0]


def _sampled_to_catalog(
    f: FunctionR2, grid: int = SAMPLED_GRID, freq_lo: float = SAMPLED_FREQ_LO
) -> FunctionR2:
    """Reconstruct a trigonometric interpolant of f from FFT samples.

    Samples grid x grid points on [-L, L)^2 with L = 8*pi/freq_lo, so
    the lowest retained frequency completes at least 8 periods in the
    box.  Raises CapabilityError when the Nyquist ring carries more than
    ALIASING_LIMIT of the total energy.
    """
    L = 8 * math.pi / freq_lo
    xs = -L + 2 * L * np.arange(grid) / grid
    vals = np.asarray(f.evaluate(xs[:, None], xs[None, :]), dtype=np.complex128)
    coeffs = np.fft.fft2(vals) / grid**2
    k = np.rint(np.fft.fftfreq(grid) * grid).astype(int)
    energy = np.abs(coeffs) ** 2
    total = float(energy.sum())
    if total == 0.0:
        return trig_poly([], label=f"sampled({f.label})")
    nyq = grid // 2
    ring = (np.abs(k[:, None]) == nyq) | (np.abs(k[None, :]) == nyq)
    if float(energy[ring].sum()) > ALIASING_LIMIT * total:
        raise CapabilityError(
            f"aliasing detected on the {grid}x{grid} grid over [-{L:.6g}, {L:.6g})^2: "
            f"Nyquist-ring energy exceeds {ALIASING_LIMIT:g} of the total; "
            "refine the grid or supply Fourier metadata"
        )
    freq = math.pi / L  # frequency spacing of the interpolant
    keep = np.abs(coeffs) > 1e-12 * float(np.abs(coeffs).max())
    modes = [
        # the grid starts at -L, so mode k picks up the phase e^{i w_k L} = (-1)^k
        (freq * k[i], freq * k[j], complex(coeffs[i, j]) * (-1.0) ** (k[i] + k[j]))
        for i, j in zip(*np.nonzero(keep))
    ]
    return trig_poly(modes, label=f"sampled({f.label})")


def _catalog_form(f: FunctionR2, grid: int) -> FunctionR2:
    if f.fourier_modes is not None:
        return f
    return _sampled_to_catalog(f, grid=grid)


def lp_blocks(
    f: FunctionR2,
    flavor: str = "inhomogeneous",
    sup_samples: int = BLOCK_SUP_SAMPLES,
    grid: int = SAMPLED_GRID,
) -> list[tuple[int, FunctionR2, Interval]]:
    """Dyadic frequency blocks of f, ascending in n.

    Each block keeps f's modes reweighted by the window value at the
    mode radius; the blocks sum back to f exactly in coefficients.  The
    zero function yields an empty list.
    """
    family = LPWindowFamily(flavor)
    g = _catalog_form(f, grid)
    if flavor == "homogeneous":
        _reject_constant_component(g)
    buckets: dict[int, list] = {}
    for a, b, c in g.fourier_modes:
        r = math.hypot(a, b)
        for n, w in family.active(r):
            buckets.setdefault(n, []).append((a, b, w * c))
    out = []
    for n in sorted(buckets):
        block = trig_poly(buckets[n], label=f"block[{n}]({f.label})")
        if block.fourier_modes:
            out.append((n, block, sup_norm_interval(block, samples=sup_samples)))
    return out


def _reject_constant_component(g: FunctionR2) -> None:
    if any(a == 0 and b == 0 for a, b, _ in g.fourier_modes):
        raise ValidationError(
            "homogeneous flavor ignores constants: strip the zero-frequency "
            "component explicitly before taking the norm"
        )


def besov_norm(
    f: FunctionR2,
    flavor: str = "inhomogeneous",
    sup_samples: int = BLOCK_SUP_SAMPLES,
    grid: int = SAMPLED_GRID,
) -> Interval:
    """Sum of 2^n times the block sup-norm bracket, as an interval."""
    blocks = lp_blocks(f, flavor=flavor, sup_samples=sup_samples, grid=grid)
    total = Interval(0.0, 0.0)
    for n, _, sup in blocks:
        total = total + sup.scale(math.ldexp(1.0, n))
    return total


def support_radius(f: FunctionR2) -> float:
    """Largest mode radius |(a, b)|; 0 for the zero function."""
    if f.fourier_modes is None:
        raise CapabilityError(
            "support radius needs Fourier metadata; build f via the catalog"
        )
    return max((math.hypot(a, b) for a, b, _ in f.fourier_modes), default=0.0)


@dataclass(frozen=True)
class BesovReport:
    """Per-block sup-norm brackets and the two norm flavors.

    ``homogeneous_norm`` is None when f has a constant component (the
    homogeneous sum is undefined there until the caller strips it).
    """

    block_norms: tuple[tuple[int, Interval], ...]
    inhomogeneous_norm: Interval
    homogeneous_norm: Interval | None

    def to_doc(self) -> dict:
        return {
            "blocks": [
                {
                    "n": n,
                    "lower": sup.lo,
                    "upper": sup.hi,
                    "contribution_lower": math.ldexp(sup.lo, n),
                    "contribution_upper": math.ldexp(sup.hi, n),
                }
                for n, sup in self.block_norms
            ],
            "inhomogeneous": {
                "lower": self.inhomogeneous_norm.lo,
                "upper": self.inhomogeneous_norm.hi,
            },
            "homogeneous": None
            if self.homogeneous_norm is None
            else {
                "lower": self.homogeneous_norm.lo,
                "upper": self.homogeneous_norm.hi,
            },
        }


def besov_report(
    f: FunctionR2,
    sup_samples: int = BLOCK_SUP_SAMPLES,
    grid: int = SAMPLED_GRID,
) -> BesovReport:
    """Compute blocks and both norm flavors in one pass."""
    blocks = lp_blocks(f, flavor="inhomogeneous", sup_samples=sup_samples, grid=grid)
    inhom = Interval(0.0, 0.0)
    for n, _, sup in blocks:
        inhom = inhom + sup.scale(math.ldexp(1.0, n))
    g = _catalog_form(f, grid)
    try:
        _reject_constant_component(g)
    except ValidationError:
        hom = None
    else:
        hom = besov_norm(g, flavor="homogeneous", sup_samples=sup_samples, grid=grid)
    return BesovReport(
        block_norms=tuple((n, sup) for n, _, sup in blocks),
        inhomogeneous_norm=inhom,
        homogeneous_norm=hom,
    )
