"""Scalar functions on the plane.

A catalog of bandlimited trigonometric sums (with exact Fourier-mode
metadata and analytic partials), slotwise divided differences with the
coincident-point derivative rule, and the resolvent weighting
f(s,t) -> f(s,t) / (1 - i t) used to tame operators with huge spectra.

Evaluators accept scalars or numpy arrays and broadcast; catalog-built
functions evaluate whole spectral grids in one vectorized call.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import CapabilityError, ValidationError
from .interval import Interval

#: a Fourier mode (a, b, c) stands for c * exp(i (a s + b t))
Mode = tuple[float, float, complex]


class DividedDifferenceKind(enum.Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class FunctionR2:
    """A scalar function f(s, t) with optional analytic partials and
    Fourier-support metadata.

    ``fourier_modes`` is present exactly for catalog-built functions; it
    lists (a, b, coefficient) triples and makes frequency-space
    operations exact.  ``support_radius`` is the largest |(a, b)| over
    the modes.
    """

    evaluate: Callable
    partial_x: Callable | None = None
    partial_y: Callable | None = None
    fourier_modes: tuple[Mode, ...] | None = None
    support_radius: float | None = None
    label: str = "f"

    def __add__(self, other: "FunctionR2") -> "FunctionR2":
        return function_sum(self, other)

    def __rmul__(self, c) -> "FunctionR2":
        return scale(self, c)

    __mul__ = __rmul__


def _scalarize(out):
    if isinstance(out, np.ndarray) and out.ndim == 0:
        return complex(out)
    return out


def _mode_arrays(modes: tuple[Mode, ...]):
    freqs = np.array([[a, b] for a, b, _ in modes], dtype=np.float64).reshape(-1, 2)
    coeffs = np.array([c for _, _, c in modes], dtype=np.complex128)
    return freqs, coeffs


def _mode_evaluator(modes: tuple[Mode, ...]) -> Callable:
    freqs, coeffs = _mode_arrays(modes)
    a, b = freqs[:, 0], freqs[:, 1]

    def evaluate(s, t):
        s = np.asarray(s, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        if coeffs.size == 0:
            return _scalarize(
                np.zeros(np.broadcast_shapes(s.shape, t.shape), dtype=np.complex128)
            )
        phase = np.multiply.outer(s, a) + np.multiply.outer(t, b)
        return _scalarize(np.exp(1j * phase) @ coeffs)

    return evaluate


def _merge_modes(raw: Iterable) -> tuple[Mode, ...]:
    acc: dict[tuple[float, float], complex] = {}
    for a, b, c in raw:
        key = (float(a), float(b))
        acc[key] = acc.get(key, 0j) + complex(c)
    merged = tuple(
        (a, b, c) for (a, b), c in sorted(acc.items()) if c != 0
    )
    return merged


def trig_poly(modes: Iterable, label: str | None = None) -> FunctionR2:
    """Finite trigonometric sum sum_j c_j exp(i (a_j s + b_j t)).

    Duplicate frequencies are merged; an empty (or fully cancelling)
    mode list yields the zero function with support radius 0.
    """
    merged = _merge_modes(modes)
    radius = max((math.hypot(a, b) for a, b, _ in merged), default=0.0)
    dx = tuple((a, b, 1j * a * c) for a, b, c in merged)
    dy = tuple((a, b, 1j * b * c) for a, b, c in merged)
    if label is None:
        label = "trig_poly[" + ",".join(
            f"({a:g},{b:g})" for a, b, _ in merged
        ) + "]"
    return FunctionR2(
        evaluate=_mode_evaluator(merged),
        partial_x=_mode_evaluator(dx),
        partial_y=_mode_evaluator(dy),
        fourier_modes=merged,
        support_radius=radius,
        label=label,
    )


def plane_wave(a: float, b: float, coeff=1.0) -> FunctionR2:
    """Single mode coeff * exp(i (a s + b t))."""
    return trig_poly([(a, b, coeff)], label=f"plane_wave({a:g},{b:g})")


def zero_function() -> FunctionR2:
    return trig_poly([], label="zero")


def dilate(f: FunctionR2, lam: float) -> FunctionR2:
    """Frequency scaling: (dilate f)(s, t) = f(lam*s, lam*t)."""
    if not (lam > 0):
        raise ValidationError("dilation factor must be positive")
    if f.fourier_modes is None:
        raise CapabilityError("dilate needs Fourier metadata; build f via the catalog")
    return trig_poly(
        [(lam * a, lam * b, c) for a, b, c in f.fourier_modes],
        label=f"dilate({f.label},{lam:g})",
    )


def scale(f: FunctionR2, c) -> FunctionR2:
    """Pointwise scalar multiple c * f."""
    c = complex(c)
    if f.fourier_modes is not None:
        return trig_poly(
            [(a, b, c * w) for a, b, w in f.fourier_modes],
            label=f"scale({f.label},{c:g})",
        )
    ev = f.evaluate
    px, py = f.partial_x, f.partial_y
    return FunctionR2(
        evaluate=lambda s, t: _scalarize(c * np.asarray(ev(s, t))),
        partial_x=None if px is None else (lambda s, t: _scalarize(c * np.asarray(px(s, t)))),
        partial_y=None if py is None else (lambda s, t: _scalarize(c * np.asarray(py(s, t)))),
        label=f"scale({f.label},{c:g})",
    )


def function_sum(*fs: FunctionR2) -> FunctionR2:
    """Pointwise sum; exact on Fourier modes when every term is catalog-built."""
    if not fs:
        return zero_function()
    if all(f.fourier_modes is not None for f in fs):
        modes = [m for f in fs for m in f.fourier_modes]
        return trig_poly(modes, label="sum(" + ";".join(f.label for f in fs) + ")")
    evs = [f.evaluate for f in fs]

    def evaluate(s, t):
        return _scalarize(sum(np.asarray(ev(s, t)) for ev in evs))

    def _sum_partials(parts):
        if any(p is None for p in parts):
            return None
        return lambda s, t: _scalarize(sum(np.asarray(p(s, t)) for p in parts))

    return FunctionR2(
        evaluate=evaluate,
        partial_x=_sum_partials([f.partial_x for f in fs]),
        partial_y=_sum_partials([f.partial_y for f in fs]),
        label="sum(" + ";".join(f.label for f in fs) + ")",
    )


def from_callable(
    evaluate: Callable,
    partial_x: Callable | None = None,
    partial_y: Callable | None = None,
    label: str = "callable",
) -> FunctionR2:
    """Wrap a plain numpy-broadcastable callable (evaluation-only unless
    partials are supplied; no Fourier metadata)."""
    return FunctionR2(
        evaluate=evaluate, partial_x=partial_x, partial_y=partial_y, label=label
    )


def coordinate_x() -> FunctionR2:
    """f(x, y) = x, with analytic partials; identity-test hook."""
    return from_callable(
        lambda s, t: _scalarize(
            (np.asarray(s, dtype=np.float64) + 0j) + 0 * np.asarray(t, dtype=np.float64)
        ),
        partial_x=lambda s, t: _scalarize(
            np.ones(np.broadcast_shapes(np.shape(s), np.shape(t)), dtype=np.complex128)
        ),
        partial_y=lambda s, t: _scalarize(
            np.zeros(np.broadcast_shapes(np.shape(s), np.shape(t)), dtype=np.complex128)
        ),
        label="coord_x",
    )


def coordinate_y() -> FunctionR2:
    """f(x, y) = y, with analytic partials; identity-test hook."""
    return from_callable(
        lambda s, t: _scalarize(
            (np.asarray(t, dtype=np.float64) + 0j) + 0 * np.asarray(s, dtype=np.float64)
        ),
        partial_x=lambda s, t: _scalarize(
            np.zeros(np.broadcast_shapes(np.shape(s), np.shape(t)), dtype=np.complex128)
        ),
        partial_y=lambda s, t: _scalarize(
            np.ones(np.broadcast_shapes(np.shape(s), np.shape(t)), dtype=np.complex128)
        ),
        label="coord_y",
    )


def random_bandlimited(
    sigma: float, n_modes: int = 4, seed=0, label: str | None = None
) -> FunctionR2:
    """Seeded random trigonometric sum with support radius exactly sigma.

    One mode sits on the circle of radius sigma, the rest strictly
    inside; coefficients are complex Gaussian, normalized so the
    coefficient mass sum |c_j| is 1.
    """
    if not (sigma > 0):
        raise ValidationError("sigma must be positive")
    if n_modes < 1:
        raise ValidationError("need at least one mode")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    radii = np.concatenate([[sigma], sigma * rng.uniform(0.2, 0.95, size=n_modes - 1)])
    angles = rng.uniform(0, 2 * math.pi, size=n_modes)
    coeffs = rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)
    coeffs /= np.sum(np.abs(coeffs))
    modes = [
        (r * math.cos(t), r * math.sin(t), c)
        for r, t, c in zip(radii, angles, coeffs)
    ]
    return trig_poly(
        modes, label=label or f"bandlimited(sigma={sigma:g},seed={seed})"
    )


def catalog(spec: Mapping) -> FunctionR2:
    """Build a catalog function from a specification document.

    Schema: {"type": ..., "modes": [{"a", "b", "re", "im"}], "lambda",
    "c": [re, im], "children": [...]}.  Types: plane_wave, trig_poly,
    dilate, sum, scale, coord_x, coord_y.
    """
    if not isinstance(spec, Mapping):
        raise ValidationError(f"catalog spec must be a mapping, got {type(spec).__name__}")
    kind = spec.get("type")
    if kind is None:
        raise ValidationError("catalog spec missing field 'type'")

    def _mode(m):
        try:
            return (
                float(m["a"]),
                float(m["b"]),
                complex(float(m.get("re", 1.0)), float(m.get("im", 0.0))),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"catalog mode missing field: {exc}") from exc

    if kind == "plane_wave":
        modes = spec.get("modes")
        if not modes:
            raise ValidationError("plane_wave spec needs one entry in 'modes'")
        a, b, c = _mode(modes[0])
        return plane_wave(a, b, c)
    if kind == "trig_poly":
        return trig_poly([_mode(m) for m in spec.get("modes", [])])
    if kind == "dilate":
        children = spec.get("children") or []
        if len(children) != 1 or "lambda" not in spec:
            raise ValidationError("dilate spec needs one child and 'lambda'")
        return dilate(catalog(children[0]), float(spec["lambda"]))
    if kind == "sum":
        return function_sum(*(catalog(ch) for ch in spec.get("children") or []))
    if kind == "scale":
        children = spec.get("children") or []
        if len(children) != 1 or "c" not in spec:
            raise ValidationError("scale spec needs one child and 'c'")
        c = spec["c"]
        cval = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
        return scale(catalog(children[0]), cval)
    if kind == "coord_x":
        return coordinate_x()
    if kind == "coord_y":
        return coordinate_y()
    raise ValidationError(f"unknown catalog spec type {kind!r}")


def parse_function_spec(text: str) -> FunctionR2:
    """Parse the compact CLI shorthand for catalog functions.

    Grammar: ``plane_wave:a,b`` | ``trig_poly:a,b,re,im;...`` |
    ``sum(SPEC;SPEC;...)`` | ``scale(SPEC;re[,im])`` |
    ``dilate(SPEC;lam)`` | ``coord_x`` | ``coord_y``.
    """
    text = text.strip()
    if text == "coord_x":
        return coordinate_x()
    if text == "coord_y":
        return coordinate_y()
    if text.startswith("plane_wave:"):
        parts = text.split(":", 1)[1].split(",")
        if len(parts) not in (2, 4):
            raise ValidationError(f"plane_wave shorthand needs a,b[,re,im]: {text!r}")
        a, b = float(parts[0]), float(parts[1])
        c = complex(float(parts[2]), float(parts[3])) if len(parts) == 4 else 1.0
        return plane_wave(a, b, c)
    if text.startswith("trig_poly:"):
        modes = []
        for chunk in text.split(":", 1)[1].split(";"):
            vals = [float(v) for v in chunk.split(",")]
            if len(vals) == 2:
                vals += [1.0, 0.0]
            if len(vals) != 4:
                raise ValidationError(f"trig_poly mode needs a,b[,re,im]: {chunk!r}")
            modes.append((vals[0], vals[1], complex(vals[2], vals[3])))
        return trig_poly(modes)

    def _split_args(body: str) -> list[str]:
        out, depth, cur = [], 0, []
        for ch in body:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            if ch == ";" and depth == 0:
                out.append("".join(cur))
                cur = []
            else:
                cur.append(ch)
        out.append("".join(cur))
        return [s for s in (x.strip() for x in out) if s]

    for head in ("sum", "scale", "dilate"):
        if text.startswith(head + "(") and text.endswith(")"):
            args = _split_args(text[len(head) + 1 : -1])
            if head == "sum":
                return function_sum(*(parse_function_spec(a) for a in args))
            if len(args) != 2:
                raise ValidationError(f"{head} shorthand needs (SPEC;value): {text!r}")
            child = parse_function_spec(args[0])
            if head == "dilate":
                return dilate(child, float(args[1]))
            cparts = [float(v) for v in args[1].split(",")]
            cval = complex(cparts[0], cparts[1] if len(cparts) > 1 else 0.0)
            return scale(child, cval)
    raise ValidationError(f"cannot parse function spec {text!r}")


def divided_difference_first(f: FunctionR2, x1, x2, y):
    """Slotwise difference quotient in the first argument.

    (f(x1, y) - f(x2, y)) / (x1 - x2) wherever x1 != x2 as floating
    values; exactly coincident arguments use partial_x at the midpoint.
    Broadcasts over array arguments.
    """
    x1a = np.asarray(x1, dtype=np.float64)
    x2a = np.asarray(x2, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    num = np.asarray(f.evaluate(x1a, ya)) - np.asarray(f.evaluate(x2a, ya))
    den = x1a - x2a
    mask = den == 0
    if np.any(mask):
        if f.partial_x is None:
            raise CapabilityError(
                "divided difference at coincident first arguments needs "
                "partial_x; supply analytic partials (catalog functions carry them)"
            )
        deriv = np.asarray(f.partial_x(0.5 * (x1a + x2a), ya))
        out = np.where(mask, deriv, num / np.where(mask, 1.0, den))
    else:
        out = num / den
    return _scalarize(np.asarray(out))


def divided_difference_second(f: FunctionR2, x, y1, y2):
    """Mirror of divided_difference_first in the second slot."""
    xa = np.asarray(x, dtype=np.float64)
    y1a = np.asarray(y1, dtype=np.float64)
    y2a = np.asarray(y2, dtype=np.float64)
    num = np.asarray(f.evaluate(xa, y1a)) - np.asarray(f.evaluate(xa, y2a))
    den = y1a - y2a
    mask = den == 0
    if np.any(mask):
        if f.partial_y is None:
            raise CapabilityError(
                "divided difference at coincident second arguments needs "
                "partial_y; supply analytic partials (catalog functions carry them)"
            )
        deriv = np.asarray(f.partial_y(xa, 0.5 * (y1a + y2a)))
        out = np.where(mask, deriv, num / np.where(mask, 1.0, den))
    else:
        out = num / den
    return _scalarize(np.asarray(out))


def divided_difference(kind: DividedDifferenceKind, f: FunctionR2, u, v, w):
    if kind is DividedDifferenceKind.FIRST:
        return divided_difference_first(f, u, v, w)
    return divided_difference_second(f, u, v, w)


def f_sharp(f: FunctionR2) -> FunctionR2:
    """Resolvent weighting: (s, t) -> f(s, t) / (1 - i t).

    1 - i t never vanishes for real t.  Partials follow by the quotient
    rule when f carries them.  Fourier metadata is dropped: the quotient
    is not bandlimited.
    """
    ev, px, py = f.evaluate, f.partial_x, f.partial_y

    def weight(t):
        return 1.0 - 1j * np.asarray(t, dtype=np.float64)

    def evaluate(s, t):
        return _scalarize(np.asarray(ev(s, t)) / weight(t))

    partial_x = None
    if px is not None:
        partial_x = lambda s, t: _scalarize(np.asarray(px(s, t)) / weight(t))
    partial_y = None
    if py is not None:
        def partial_y(s, t):
            w = weight(t)
            return _scalarize(np.asarray(py(s, t)) / w + 1j * np.asarray(ev(s, t)) / w**2)

    return FunctionR2(
        evaluate=evaluate,
        partial_x=partial_x,
        partial_y=partial_y,
        label=f"sharp({f.label})",
    )


def _axis_box(freq_values: np.ndarray) -> float:
    """Box half-period covering one full period of the slowest
    oscillation along an axis."""
    nz = np.abs(freq_values[np.abs(freq_values) > 0])
    base = float(nz.min()) if nz.size else 1.0
    return 2 * math.pi / base


@lru_cache(maxsize=256)
def _sup_interval_cached(f: FunctionR2, samples: int) -> tuple[float, float]:
    modes = f.fourier_modes
    hi = sum(abs(c) for _, _, c in modes)
    if len(modes) == 0:
        return (0.0, 0.0)
    if len(modes) == 1:
        return (hi, hi)
    freqs, coeffs = _mode_arrays(modes)
    Ls = _axis_box(freqs[:, 0])
    Lt = _axis_box(freqs[:, 1])
    s = -Ls / 2 + Ls * np.arange(samples) / samples
    t = -Lt / 2 + Lt * np.arange(samples) / samples
    row = np.exp(1j * np.outer(s, freqs[:, 0])) * coeffs  # (samples, M)
    col = np.exp(1j * np.outer(freqs[:, 1], t))  # (M, samples)
    lo = 0.0
    block = max(1, (1 << 22) // samples)
    for start in range(0, samples, block):
        vals = row[start : start + block] @ col
        lo = max(lo, float(np.abs(vals).max()))
    return (min(lo, hi), hi)


def sup_norm_interval(f: FunctionR2, samples: int = 4096) -> Interval:
    """Bracket the sup norm of a catalog function.

    Lower end: grid maximum over samples^2 points of a box covering one
    period of the slowest oscillation per axis.  Upper end: sum of
    coefficient magnitudes.  The exact sup of a trigonometric sum is not
    computable in general; the bracket is honest and tight for single
    modes.
    """
    if f.fourier_modes is None:
        raise CapabilityError(
            "sup-norm interval needs Fourier metadata; build f via the catalog"
        )
    if samples < 2:
        raise ValidationError("samples must be at least 2")
    return Interval(*_sup_interval_cached(f, samples))
