"""Interaction (drift) functions and the scale-function machinery.

An interaction function f: R+ -> R with f(0) = 0 parameterizes every model in
this package.  The population-level drift of the continuous limit is f, and
the paper-style admissibility conditions are

    increment bound:  f(x+y) - f(x) <= beta * y   for all x, y >= 0,
    derivative bound: f'(x) <= beta               (when f is differentiable),

for some beta >= 0.  The scale function

    S(z) = int_1^z exp( -1/2 * int_1^u f(r)/r dr ) du

classifies the diffusion dZ = f(Z) dt + 2 sqrt(Z) dW: extinction is almost
sure iff S(z) -> infinity, and barrier-hitting probabilities are ratios of
scale-function differences.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "InteractionFunction",
    "HypothesisReport",
    "Classification",
    "ScaleReport",
    "QuadratureError",
    "evaluate",
    "validate_hypotheses",
    "scale_function",
    "classify",
    "hitting_probability",
]

# f(r)/r is extended by the value at this abscissa as r -> 0 (the ratio is
# bounded whenever the increment bound holds, so the singularity is removable)
_RATIO_CUTOFF = 1e-6


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True, eq=False)
class InteractionFunction:
    """Immutable interaction function.

    Use the factory constructors :meth:`logistic`, :meth:`linear` and
    :meth:`custom`; the raw constructor is not meant to be called directly.

    Attributes
    ----------
    kind : str
        One of ``"logistic"``, ``"linear"``, ``"custom"``.
    theta, gamma : float
        Parameters of the analytic kinds: logistic f(z) = theta*z - gamma*z**2,
        linear f(z) = theta*z.
    beta : float
        Declared increment-bound constant (>= 0).  For the analytic kinds it
        defaults to max(theta, 0), which is sharp.  A custom table carries no
        analytic certificate, so its default is 0 and callers must declare a
        constant explicitly if they claim one.
    derivative_mode : str
        ``"analytic"`` or ``"central"``; central differences use step ``h``.
    """

    kind: str
    theta: float = 0.0
    gamma: float = 0.0
    beta: float = 0.0
    derivative_mode: str = "analytic"
    h: float = 1e-6
    grid: Optional[np.ndarray] = field(default=None, repr=False)
    values: Optional[np.ndarray] = field(default=None, repr=False)

    # -- constructors -----------------------------------------------------

    @classmethod
    def logistic(cls, theta: float, gamma: float, beta: Optional[float] = None,
                 derivative_mode: str = "analytic", h: float = 1e-6) -> "InteractionFunction":
        """f(z) = theta*z - gamma*z**2 with gamma >= 0."""
        if gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {gamma}")
        if beta is None:
            beta = max(float(theta), 0.0)
        return cls("logistic", float(theta), float(gamma), float(beta), derivative_mode, h)

    @classmethod
    def linear(cls, theta: float, beta: Optional[float] = None,
               derivative_mode: str = "analytic", h: float = 1e-6) -> "InteractionFunction":
        """f(z) = theta*z."""
        if beta is None:
            beta = max(float(theta), 0.0)
        return cls("linear", float(theta), 0.0, float(beta), derivative_mode, h)

    @classmethod
    def custom(cls, grid: np.ndarray, values: np.ndarray, beta: float = 0.0,
               h: float = 1e-6) -> "InteractionFunction":
        """Tabulated f on a uniform grid, linearly interpolated in between.

        The grid must start at 0 with values[0] == 0 (f(0) = 0 is part of the
        model, not a convention).  Derivatives are central differences on the
        table; evaluating outside [grid[0], grid[-1]] is a domain error.
        """
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ValueError("grid and values must be equal-length 1-D arrays, size >= 2")
        steps = np.diff(grid)
        if grid[0] != 0.0 or np.any(steps <= 0):
            raise ValueError("grid must start at 0 and be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("grid must be uniform")
        if values[0] != 0.0:
            raise ValueError("values[0] must be exactly 0 (f(0) = 0)")
        grid.setflags(write=False)
        values.setflags(write=False)
        return cls("custom", 0.0, 0.0, float(beta), "central", h, grid, values)

    @classmethod
    def zero(cls) -> "InteractionFunction":
        """f identically 0 (critical branching, no interaction)."""
        return cls.logistic(0.0, 0.0)

    # -- evaluation --------------------------------------------------------

    def __call__(self, z):
        """Evaluate f at scalar or array z >= 0."""
        arr = np.asarray(z, dtype=float)
        if np.any(arr < 0):
            raise ValueError("interaction functions are defined on z >= 0")
        if self.kind == "logistic":
            out = self.theta * arr - self.gamma * arr * arr
        elif self.kind == "linear":
            out = self.theta * arr
        else:
            if np.any(arr > self.grid[-1]):
                raise ValueError(
                    f"z outside tabulated range [0, {self.grid[-1]}]")
            out = np.interp(arr, self.grid, self.values)
        if np.isscalar(z) or arr.ndim == 0:
            return float(out)
        return out

    def derivative(self, z):
        """f'(z), analytic when available, otherwise central difference."""
        arr = np.asarray(z, dtype=float)
        if self.derivative_mode == "analytic":
            if self.kind == "logistic":
                out = self.theta - 2.0 * self.gamma * arr
            elif self.kind == "linear":
                out = self.theta * np.ones_like(arr)
            else:
                raise ValueError("custom interaction has no analytic derivative")
        else:
            h = self.h
            lo = np.maximum(arr - h, 0.0)
            out = (self._eval_clamped(arr + h) - self._eval_clamped(lo)) / (arr + h - lo)
        if np.isscalar(z) or arr.ndim == 0:
            return float(out)
        return out

    def _eval_clamped(self, z):
        # clamp into the tabulated range so difference quotients near the
        # table edge remain defined
        if self.kind == "custom":
            z = np.clip(z, 0.0, self.grid[-1])
        return self(z)

    def ratio(self, r):
        """f(r)/r with the removable singularity at 0 filled in."""
        arr = np.asarray(r, dtype=float)
        safe = np.maximum(arr, _RATIO_CUTOFF)
        out = self._eval_clamped(safe) / safe
        if np.isscalar(r) or arr.ndim == 0:
            return float(out)
        return out

    def describe(self) -> dict:
        d = {"kind": self.kind, "beta": self.beta}
        if self.kind == "logistic":
            d.update(theta=self.theta, gamma=self.gamma)
        elif self.kind == "linear":
            d.update(theta=self.theta)
        else:
            d.update(grid_max=float(self.grid[-1]), points=int(self.grid.size))
        return d


def evaluate(f: InteractionFunction, z: float) -> float:
    """f(z) for z >= 0; f(0) is exactly 0 by construction."""
    return f(z)


# ---------------------------------------------------------------------------
# hypothesis validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisReport:
    """Grid certification of the admissibility bounds.

    ``A`` is the increment bound (with the declared beta), ``B`` the
    derivative bound; ``beta_witness`` is the smallest constant the grid can
    certify, i.e. max over sampled pairs of (f(x+y)-f(x))/y clipped at 0.
    """
    A: bool
    B: bool
    beta_witness: float


def validate_hypotheses(f: InteractionFunction, grid_max: float = 10.0,
                        grid_step: float = 0.1) -> HypothesisReport:
    """Check the increment and derivative bounds on a grid.

    Failures are reported, never raised.  The relative tolerance 1e-12
    absorbs roundoff in f itself.
    """
    if grid_max <= 0 or grid_step <= 0:
        raise ValueError("grid_max and grid_step must be positive")
    if f.kind == "custom":
        grid_max = min(grid_max, float(f.grid[-1]))
    n = int(round(grid_max / grid_step))
    pts = np.linspace(0.0, grid_max, n + 1)
    vals = f(pts)

    ok_zero = vals[0] == 0.0
    # all pairs x = pts[i], x+y = pts[j], j > i
    ratios = []
    a_holds = ok_zero
    for i in range(n):
        y = pts[i + 1:] - pts[i]
        inc = vals[i + 1:] - vals[i]
        r = inc / y
        ratios.append(r.max() if r.size else -math.inf)
        scale = np.maximum(np.abs(vals[i + 1:]), 1.0)
        if np.any(inc - f.beta * y > 1e-12 * scale):
            a_holds = False
    beta_witness = max(0.0, float(max(ratios)))

    try:
        deriv = f.derivative(pts)
        b_holds = bool(np.all(deriv <= f.beta + 1e-12))
    except ValueError:
        b_holds = False
    return HypothesisReport(A=bool(a_holds), B=b_holds, beta_witness=beta_witness)


# ---------------------------------------------------------------------------
# adaptive quadrature (nested Simpson)
# ---------------------------------------------------------------------------

def _simpson(g, a, fa, m, fm, b, fb):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(g, a, fa, b, fb, m, fm, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = g(lm)
    frm = g(rm)
    left = _simpson(g, a, fa, lm, flm, m, fm)
    right = _simpson(g, m, fm, rm, frm, b, fb)
    err = left + right - whole
    if not math.isfinite(err):
        raise QuadratureError(f"integrand not finite on [{a}, {b}]")
    if abs(err) <= 15.0 * tol or (b - a) < 1e-14 * max(abs(a), abs(b), 1.0):
        if depth <= 0:
            raise QuadratureError("adaptive Simpson recursion limit reached")
        return left + right + err / 15.0
    return (_adaptive(g, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + _adaptive(g, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1))


def adaptive_simpson(g, a: float, b: float, tol: float) -> float:
    """Integral of g over [a, b], adaptive Simpson with absolute tolerance."""
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    fa, fb = g(a), g(b)
    m = 0.5 * (a + b)
    fm = g(m)
    whole = _simpson(g, a, fa, m, fm, b, fb)
    return sign * _adaptive(g, a, fa, b, fb, m, fm, whole, tol, depth=60)


class _ScaleIntegrand:
    """exp(-1/2 * int_1^u f(r)/r dr) with a memoized inner integral."""

    def __init__(self, f: InteractionFunction, inner_tol: float):
        self.f = f
        self.inner_tol = inner_tol
        self._cache = {1.0: 0.0}

    def inner(self, u: float) -> float:
        got = self._cache.get(u)
        if got is None:
            got = adaptive_simpson(self.f.ratio, 1.0, u, self.inner_tol)
            self._cache[u] = got
        return got

    def __call__(self, u: float) -> float:
        expo = -0.5 * self.inner(u)
        if expo > 700.0:
            raise QuadratureError(
                "scale-function integrand overflows; S diverges too fast to tabulate")
        return math.exp(expo)


def scale_function(f: InteractionFunction, z: float,
                   inner_tol: float = 1e-9, outer_tol: float = 1e-8) -> float:
    """Scale function S(z) = int_1^z exp(-1/2 int_1^u f(r)/r dr) du.

    S(1) = 0 and S is strictly increasing.  Computed by nested adaptive
    Simpson rules (inner tolerance 1e-9, outer 1e-8 by default).
    """
    if z < 0:
        raise ValueError("scale_function needs z >= 0")
    if z == 1.0:
        return 0.0
    g = _ScaleIntegrand(f, inner_tol)
    return adaptive_simpson(g, 1.0, float(z), outer_tol)


def hitting_probability(f: InteractionFunction, x: float, a: float, b: float,
                        inner_tol: float = 1e-9, outer_tol: float = 1e-8) -> float:
    """P(hit a before b | start at x) = (S(b)-S(x)) / (S(b)-S(a)), 0 <= a < x < b."""
    if not (0 <= a < x < b):
        raise ValueError(f"need 0 <= a < x < b, got a={a}, x={x}, b={b}")
    g = _ScaleIntegrand(f, inner_tol)
    sa = adaptive_simpson(g, 1.0, float(a), outer_tol)
    sx = adaptive_simpson(g, 1.0, float(x), outer_tol)
    sb = adaptive_simpson(g, 1.0, float(b), outer_tol)
    return (sb - sx) / (sb - sa)


# ---------------------------------------------------------------------------
# subcriticality classification
# ---------------------------------------------------------------------------

class Classification(enum.Enum):
    SUBCRITICAL = "Subcritical"
    SUPERCRITICAL = "Supercritical"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ScaleReport:
    """Outcome of the extinction-criterion test.

    ``lambda_estimate`` is the (possibly partial) value of
    Lambda(f) = int_1^inf exp(-1/2 int_1^u f(r)/r dr) du; it is math.inf when
    divergence was concluded.  ``rule`` records which test decided.
    """
    lambda_estimate: float
    classification: Classification
    upper_limit_used: float
    quadrature_tolerance: float
    rule: str = ""


# divergence is declared only when the partial integral is huge AND the
# integrand has stopped decaying, which guards against slow divergence
# masquerading as convergence and vice versa
_DIVERGENCE_PARTIAL = 1e9
_SUFFICIENT_DELTA = 1e-6


def classify(f: InteractionFunction, tail_limit: float = 1e4,
             tolerance: float = 1e-8) -> ScaleReport:
    """Classify the diffusion with drift f as sub- or supercritical.

    The sufficient conditions are tried first on a grid up to ``tail_limit``:
    f(z) <= 2 for all sampled z beyond some z0 implies subcritical, while
    f(z) >= 2 + delta beyond some z0 implies supercritical.  When neither
    applies, the tail behaviour of the scale integrand decides numerically,
    returning INCONCLUSIVE if it cannot.
    """
    if tail_limit < 10:
        raise ValueError("tail_limit must be >= 10")
    limit = tail_limit
    if f.kind == "custom":
        limit = min(limit, float(f.grid[-1]))
    grid = np.unique(np.concatenate([
        np.linspace(0.0, min(10.0, limit), 201),
        np.geomspace(1.0, limit, 400),
    ]))
    vals = f(grid)

    # sufficient condition (i): f <= 2 from some z0 on
    above = np.nonzero(vals > 2.0 + _SUFFICIENT_DELTA)[0]
    if above.size == 0 or grid[above[-1]] < limit / 2.0:
        return ScaleReport(math.inf, Classification.SUBCRITICAL, limit,
                           tolerance, rule="sufficient-f<=2")

    # sufficient condition (ii): f >= 2 + delta from some z0 on
    tail = grid >= max(1.0, limit / 100.0)
    if np.all(vals[tail] >= 2.0 + _SUFFICIENT_DELTA) and np.any(tail):
        est = _lambda_partial(f, limit, tolerance)
        return ScaleReport(est, Classification.SUPERCRITICAL, limit,
                           tolerance, rule="sufficient-f>=2+delta")

    # numerical fallback on the partial integral of the scale integrand
    try:
        partial = _lambda_partial(f, limit, tolerance)
        g = _ScaleIntegrand(f, tolerance / 10.0)
        g_tail, g_half = g(limit), g(limit / 2.0)
    except QuadratureError:
        return ScaleReport(math.inf, Classification.SUBCRITICAL, limit,
                           tolerance, rule="integrand-overflow")
    if partial > _DIVERGENCE_PARTIAL and g_tail >= g_half:
        return ScaleReport(math.inf, Classification.SUBCRITICAL, limit,
                           tolerance, rule="divergence")
    if g_tail < g_half:
        # local power-law decay rate; a tail estimate below tolerance means
        # the integral has effectively converged
        alpha = math.log2(g_half / g_tail) if g_tail > 0 else math.inf
        if alpha > 1.0:
            tail_est = 0.0 if g_tail == 0.0 else g_tail * limit / (alpha - 1.0)
            if tail_est < max(tolerance, 1e-6 * max(partial, 1.0)):
                return ScaleReport(partial + tail_est, Classification.SUPERCRITICAL,
                                   limit, tolerance, rule="tail-convergence")
    return ScaleReport(partial, Classification.INCONCLUSIVE, limit,
                       tolerance, rule="inconclusive")


def _lambda_partial(f: InteractionFunction, limit: float, tolerance: float) -> float:
    g = _ScaleIntegrand(f, tolerance / 10.0)
    try:
        return adaptive_simpson(g, 1.0, limit, tolerance)
    except QuadratureError:
        return math.inf
