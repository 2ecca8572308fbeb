"""Transform-to-number plumbing.

Moments come from derivatives at the origin, evaluated on the imaginary axis
(always inside the transform domain) with Richardson extrapolation.  LSTs are
inverted to CDFs with a damped Fourier series plus Euler summation; GFs are
inverted to probability mass functions with an FFT on a shrunken circle.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AccuracyError, IllConditionedError

#: default damping for CDF inversion; exp(-A) bounds the aliasing error by 1e-10
DEFAULT_DAMPING = 23.1
DEFAULT_TERMS = 40
DEFAULT_EULER = 12


@dataclass
class TransformFn:
    """An evaluable scalar transform with the metadata inversion needs.

    kind is "lst" (argument w, Re w >= 0, value E[exp(-wX)]) or "gf"
    (argument z, |z| <= 1, value E[z^L]).  scale is a time/size hint (the mean
    when known) used to pick differentiation steps and probe points.
    """

    evaluator: Callable[[complex], complex]
    kind: str = "lst"
    mass_at_zero: bool | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("lst", "gf"):
            raise ValueError("kind must be 'lst' or 'gf'")
        if not self.scale > 0:
            raise ValueError("scale hint must be positive")
        origin = self.evaluator(0.0 if self.kind == "lst" else 1.0)
        if abs(origin - 1.0) > 1e-12:
            raise ValueError(f"transform is not normalized: value at origin is {origin}")

    @classmethod
    def lst(cls, evaluator, scale: float = 1.0, mass_at_zero: bool | None = None) -> "TransformFn":
        return cls(evaluator, "lst", mass_at_zero, scale)

    @classmethod
    def gf(cls, evaluator, scale: float = 1.0) -> "TransformFn":
        return cls(evaluator, "gf", None, scale)


@dataclass
class InversionGrid:
    """Numerical inversion output: values on abscissae with error estimates."""

    abscissae: np.ndarray
    values: np.ndarray
    error_estimates: np.ndarray
    kind: str = "cdf"
    diagnostics: dict = field(default_factory=dict)


def _moment_nodes(f: TransformFn, h: float) -> tuple[float, complex]:
    """Transform value at the origin and one step up the imaginary axis."""
    if f.kind == "lst":
        return f.evaluator(0.0).real, f.evaluator(1j * h)
    # a GF becomes the LST of its integer variable under z = exp(-w)
    return f.evaluator(1.0).real, f.evaluator(cmath.exp(-1j * h))


def derivative_at_zero(f: TransformFn, order: int, h_rel: float = 1e-3) -> float:
    """Moment extraction: E(X^order) for an LST, factorial moment for a GF.

    Central differences in disguise: for a transform with real coefficients,
    f(-ih) = conj(f(ih)), so the imaginary part of f(ih) carries the odd
    derivatives and the real part the even ones, with no evaluation outside
    the domain.  Steps h, 2h, 4h feed two Richardson levels (h^2 and h^4
    error terms eliminated); the two extrapolants' disagreement is the
    conditioning diagnostic.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    h0 = h_rel / f.scale
    estimates = []
    for h in (h0, 2.0 * h0, 4.0 * h0):
        origin, up = _moment_nodes(f, h)
        if order == 1:
            estimates.append(-up.imag / h)  # E sin(hX)/h
        else:
            estimates.append(2.0 * (origin - up.real) / (h * h))  # E X^2 + O(h^2)
    d_h, d_2h, d_4h = estimates
    r_fine = (4.0 * d_h - d_2h) / 3.0
    r_coarse = (4.0 * d_2h - d_4h) / 3.0
    value = (16.0 * r_fine - r_coarse) / 15.0
    disagreement = abs(r_fine - r_coarse)
    denom = max(abs(value), 1e-12 * f.scale ** order)
    if disagreement / denom > 1e-5:
        raise IllConditionedError(
            f"derivative extrapolants disagree by {disagreement / denom:.3e} relative"
        )
    if f.kind == "gf" and order == 2:
        # raw second moment -> second factorial moment
        value -= derivative_at_zero(f, 1, h_rel)
    return value


def mass_at_zero(f: TransformFn) -> float:
    """Atom at 0 of an LST's distribution: limit of f along the real axis."""
    return float(f.evaluator(1e6 / f.scale).real)


def invert_lst(
    f: TransformFn,
    t_grid,
    terms: int = DEFAULT_TERMS,
    euler: int = DEFAULT_EULER,
    damping: float = DEFAULT_DAMPING,
    raise_on_accuracy: bool = True,
) -> InversionGrid:
    """CDF values F(t) from the LST f, by damped-Fourier-series inversion of f(w)/w.

    Per point the series is summed with `terms` plain partial sums followed by
    binomial (Euler) averaging of the next `euler` of them.  The damping
    parameter A bounds the discretization (aliasing) error by exp(-A) for a
    CDF.  The error estimate per point is the difference between the last two
    Euler averages; if it exceeds 1e-6 the transform is oscillating too
    slowly for the budget and ACCURACY is raised.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0):
        raise ValueError("time grid must be nonnegative")
    if terms < 1 or euler < 2:
        raise ValueError("need terms >= 1 and euler >= 2")
    ev = f.evaluator
    atom = mass_at_zero(f)
    values = np.empty_like(t_grid)
    errs = np.empty_like(t_grid)
    binom = np.array([math.comb(euler, j) for j in range(euler + 1)], dtype=float)
    binom /= 2.0 ** euler
    binom_prev = np.array([math.comb(euler - 1, j) for j in range(euler)], dtype=float)
    binom_prev /= 2.0 ** (euler - 1)
    for idx, t in enumerate(t_grid):
        if t == 0.0:
            values[idx] = atom
            errs[idx] = 0.0
            continue
        a = damping / (2.0 * t)
        prefac = math.exp(damping / 2.0) / t
        # F_hat(s) = f(s)/s is the ordinary Laplace transform of the CDF
        s = a
        partial = 0.5 * (ev(s) / s).real
        partials = []
        total_terms = terms + euler
        for k in range(1, total_terms + 1):
            s = complex(a, k * math.pi / t)
            term = (ev(s) / s).real
            partial += term if k % 2 == 0 else -term
            if k >= terms:
                partials.append(partial)
        tail = np.array(partials[: euler + 1])
        euler_avg = float(binom @ tail)
        euler_avg_prev = float(binom_prev @ tail[:euler])
        values[idx] = prefac * euler_avg
        errs[idx] = abs(prefac * (euler_avg - euler_avg_prev))
    if raise_on_accuracy and errs.size and float(np.max(errs)) > 1e-6:
        raise AccuracyError(
            f"inversion oscillation estimate {float(np.max(errs)):.3e} exceeds 1e-6 "
            f"(non-smooth target? raise `terms`/`euler`)"
        )
    return InversionGrid(
        abscissae=t_grid,
        values=values,
        error_estimates=errs,
        kind="cdf",
        diagnostics={"terms": terms, "euler": euler, "damping": damping, "mass_at_zero": atom},
    )


def invert_gf(
    f: TransformFn,
    n_max: int,
    radius: float | None = None,
    raise_on_accuracy: bool = True,
) -> InversionGrid:
    """Probabilities p_0..p_n_max from a GF via an FFT on a circle of radius r.

    Trapezoidal Cauchy integral with M >= 2*(n_max+1) points aliases p_n with
    p_{n+M} * r^M; the default radius makes r^M = 1e-12.  Shrinking r further
    trades aliasing for roundoff amplification r^{-n}.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    m_points = 1 << max(6, (2 * (n_max + 1) - 1).bit_length())
    r = radius if radius is not None else math.exp(math.log(1e-12) / m_points)
    if not 0.0 < r <= 1.0:
        raise ValueError("radius must lie in (0, 1]")
    nodes = r * np.exp(2j * math.pi * np.arange(m_points) / m_points)
    samples = np.array([f.evaluator(z) for z in nodes], dtype=complex)
    coeffs = np.fft.fft(samples)[: n_max + 1]
    n = np.arange(n_max + 1)
    probs = coeffs.real / (m_points * r ** n)
    alias = r ** m_points / (1.0 - r ** m_points)
    round_off = 4.0 * np.finfo(float).eps * m_points / r ** n / m_points
    errs = alias / r ** n + round_off
    total = float(probs.sum())
    if raise_on_accuracy and total > 1.0 + 1e-8:
        raise AccuracyError(f"inverted pmf mass {total} exceeds 1 beyond tolerance")
    return InversionGrid(
        abscissae=n.astype(float),
        values=probs,
        error_estimates=errs,
        kind="pmf",
        diagnostics={"points": m_points, "radius": r},
    )
