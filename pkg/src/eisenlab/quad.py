"""Adaptive integration over intervals, vertical lines, the real line, and
the truncated fundamental domain of the modular group.

The engine is a 15-point Kronrod rule with embedded 7-point Gauss estimate,
refined worst-error-first with a deterministic index tiebreak so results
are bit-stable across runs.  Two-dimensional domains are handled as an
adaptive outer integral whose integrand is an inner fixed composite rule;
integrands are supplied in row form f(y, xs) -> values so the inner rule is
a single vectorized evaluation.

Geometry: the standard fundamental domain D = {|z| >= 1, |x| <= 1/2} with
hyperbolic measure dmu = dx dy / y^2.  D_A is its part with y <= A and C_A
the cusp strip above.  The arc boundary y = sqrt(1 - x^2) is integrated in
the angle variable (y = cos(theta)) to remove the square-root derivative
singularity at y = 1.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, TailNotDecaying
from .util import EvalTolerance, csum

__all__ = [
    "ComplexPoint",
    "DomainSpec",
    "QuadResult",
    "integrate_interval",
    "integrate_D_A",
    "integrate_strip",
    "integrate_line",
    "Y_FUNDAMENTAL",
]

#: lowest height in the fundamental domain, sqrt(3)/2
Y_FUNDAMENTAL = math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class ComplexPoint:
    """Point z = x + i y in the upper half-plane."""

    x: float
    y: float

    def __post_init__(self):
        if not (self.y > 0):
            raise ValueError("ComplexPoint requires y > 0")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    def in_D(self) -> bool:
        return self.x * self.x + self.y * self.y >= 1.0 - 1e-15 and abs(self.x) <= 0.5 + 1e-15

    def in_D_A(self, A: float) -> bool:
        return self.in_D() and self.y <= A

    def in_C_A(self, A: float) -> bool:
        return self.in_D() and self.y > A


@dataclass(frozen=True)
class DomainSpec:
    """Description of an integration domain.

    kind: one of "interval", "vertical_line", "real_line", "D_A", "C_A_strip".
    A: truncation height for the domain kinds that use one (must be > 1).
    cutoffs: interval endpoints or line truncation, kind-dependent.
    """

    kind: str
    A: float = 0.0
    cutoffs: tuple = ()

    def __post_init__(self):
        kinds = {"interval", "vertical_line", "real_line", "D_A", "C_A_strip"}
        if self.kind not in kinds:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind in {"D_A", "C_A_strip"} and not self.A > 1.0:
            raise ValueError("truncated domains require A > 1")


@dataclass
class QuadResult:
    """Value with a conservative error estimate and work accounting."""

    value: complex
    error: float
    work: int
    converged: bool = True

    def __complex__(self) -> complex:
        return complex(self.value)


# ---------------------------------------------------------------------
# Gauss-Kronrod 15(7) core
# ---------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])           # 15 nodes on [-1,1]
GK_WEIGHTS_K = np.concatenate([_WGK[:-1], _WGK[::-1]])
GK_WEIGHTS_G = np.zeros(15)
GK_WEIGHTS_G[1:-1:2] = np.concatenate([_WG[:-1], _WG[::-1]])


def _panel_nodes(edges: np.ndarray) -> np.ndarray:
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return mid[:, None] + half[:, None] * GK_NODES[None, :]


def _panel_sums(fv: np.ndarray, edges: np.ndarray):
    half = 0.5 * (edges[1:] - edges[:-1])
    k15 = (fv * GK_WEIGHTS_K[None, :]).sum(axis=1) * half
    g7 = (fv * GK_WEIGHTS_G[None, :]).sum(axis=1) * half
    return k15, np.abs(k15 - g7)


def _adaptive(f, a: float, b: float, tol: EvalTolerance,
              initial_panels: int = 4):
    """Worst-error-first adaptive GK15 on [a, b]; f maps ndarray -> ndarray."""
    edges = np.linspace(a, b, initial_panels + 1)
    fv = f(_panel_nodes(edges).ravel()).reshape(initial_panels, 15)
    vals, errs = _panel_sums(fv, edges)
    total = csum(vals)
    err = float(errs.sum())
    work = initial_panels

    heap = [(-errs[i], i, edges[i], edges[i + 1], complex(vals[i]))
            for i in range(len(vals))]
    heapq.heapify(heap)
    counter = len(vals)
    while err > tol.target(abs(total)) and heap:
        if work >= tol.max_work:
            raise BudgetExceeded(
                f"interval budget exhausted on [{a},{b}]",
                value=total, error=err)
        neg_e, _, pa, pb, v_old = heapq.heappop(heap)
        if -neg_e <= 0.0:
            break
        pm = 0.5 * (pa + pb)
        sub = np.array([pa, pm, pb])
        fv = f(_panel_nodes(sub).ravel()).reshape(2, 15)
        v2, e2 = _panel_sums(fv, sub)
        total = total - v_old + v2[0] + v2[1]
        err = err + float(e2.sum()) + float(neg_e)
        for j, (x0, x1) in enumerate(((pa, pm), (pm, pb))):
            counter += 1
            heapq.heappush(heap, (-e2[j], counter, x0, x1, complex(v2[j])))
        work += 2
    return total, err, work


def integrate_interval(f, a: float, b: float,
                       tol: EvalTolerance = EvalTolerance(),
                       vectorized: bool = True,
                       initial_panels: int = 4) -> QuadResult:
    """Adaptive Gauss-Kronrod estimate of int_a^b f(x) dx.

    f receives an ndarray of abscissae when vectorized (default) and must
    return the values elementwise; complex integrands are fine.  Raises
    BudgetExceeded (with partial value and estimate attached) if the
    refinement budget runs out before the tolerance is met.
    """
    if not a < b:
        raise ValueError("need a < b")
    g = f if vectorized else (lambda xs: np.array([f(float(x)) for x in xs]))
    value, err, work = _adaptive(g, a, b, tol, initial_panels)
    return QuadResult(value=value, error=err, work=work)


# ---------------------------------------------------------------------
# Fixed composite inner rule (for iterated 2D quadrature)
# ---------------------------------------------------------------------

class _FixedRule:
    """Composite GK15 rule on [a, b] with `panels` panels.

    Exposes flattened nodes plus Kronrod/Gauss weight vectors, so an inner
    integral is a dot product against one row evaluation.
    """

    def __init__(self, a: float, b: float, panels: int):
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        self.nodes = _panel_nodes(edges).ravel()
        self.wk = (GK_WEIGHTS_K[None, :] * half[:, None]).ravel()
        self.wg = (GK_WEIGHTS_G[None, :] * half[:, None]).ravel()

    def apply(self, row: np.ndarray):
        k = row.dot(self.wk)
        g = row.dot(self.wg)
        return k, abs(k - g)


def _as_row(f, row: bool):
    if row:
        return f

    def wrapper(y, xs):
        return np.array([f(ComplexPoint(float(x), float(y))) for x in xs])
    return wrapper


def integrate_D_A(f, A: float,
                  tol: EvalTolerance = EvalTolerance(),
                  row: bool = False,
                  even_x: bool = False,
                  x_panels: int = 8) -> QuadResult:
    """int_{D_A} f dmu with dmu = dx dy / y^2, A > 1.

    f is either scalar f(ComplexPoint) -> complex or, with row=True, a row
    function f(y, xs) -> values.  even_x halves the x-range for integrands
    symmetric under x -> -x.  x_panels sets the inner composite rule; use
    roughly the number of Fourier modes the integrand carries.
    """
    if not A > 1.0:
        raise ValueError("integrate_D_A requires A > 1")
    fr = _as_row(f, row)
    inner_err = [0.0]

    def x_integral(y: float, x_lo: float) -> complex:
        if even_x:
            rule = _FixedRule(x_lo, 0.5, x_panels)
            v, e = rule.apply(fr(y, rule.nodes))
            v, e = 2.0 * v, 2.0 * e
        elif x_lo > 0:
            rule_l = _FixedRule(-0.5, -x_lo, x_panels)
            rule_r = _FixedRule(x_lo, 0.5, x_panels)
            v1, e1 = rule_l.apply(fr(y, rule_l.nodes))
            v2, e2 = rule_r.apply(fr(y, rule_r.nodes))
            v, e = v1 + v2, e1 + e2
        else:
            rule = _FixedRule(-0.5, 0.5, x_panels)
            v, e = rule.apply(fr(y, rule.nodes))
        inner_err[0] = max(inner_err[0], e)
        return v

    # strip part: y in [1, A], full x-range
    def g_strip(ys: np.ndarray) -> np.ndarray:
        return np.array([x_integral(float(y), 0.0) / (y * y) for y in ys])

    # arc part in the angle variable: y = cos(t), x from sin(t) to 1/2
    def g_arc(ts: np.ndarray) -> np.ndarray:
        out = []
        for t in ts:
            y = math.cos(t)
            out.append(x_integral(y, math.sin(t)) * math.sin(t) / (y * y))
        return np.array(out)

    half_tol = tol.tighter(0.5)
    v1, e1, w1 = _adaptive(g_strip, 1.0, A, half_tol, initial_panels=max(4, min(32, int(A))))
    v2, e2, w2 = _adaptive(g_arc, 0.0, math.pi / 6.0, half_tol, initial_panels=4)
    # inner-rule error enters scaled by the measure of the outer range
    e_inner = inner_err[0] * (A - Y_FUNDAMENTAL)
    return QuadResult(value=v1 + v2, error=e1 + e2 + e_inner, work=w1 + w2)


def integrate_strip(f, A: float, y_max: float,
                    tol: EvalTolerance = EvalTolerance(),
                    row: bool = False,
                    even_x: bool = False,
                    x_panels: int = 8) -> QuadResult:
    """int over the cusp strip x in [-1/2, 1/2], y in [A, y_max] of f dmu."""
    if not (y_max > A > 1.0):
        raise ValueError("need y_max > A > 1")
    fr = _as_row(f, row)
    inner_err = [0.0]
    rule = _FixedRule(0.0 if even_x else -0.5, 0.5, x_panels)
    factor = 2.0 if even_x else 1.0

    def g(ys: np.ndarray) -> np.ndarray:
        out = []
        for y in ys:
            v, e = rule.apply(fr(float(y), rule.nodes))
            inner_err[0] = max(inner_err[0], e)
            out.append(factor * v / (y * y))
        return np.array(out)

    v, e, w = _adaptive(g, A, y_max, tol, initial_panels=max(4, min(24, int(y_max - A) + 1)))
    return QuadResult(value=v, error=e + factor * inner_err[0] * (y_max - A), work=w)


def integrate_line(f, kind: str = "real_line",
                   tol: EvalTolerance = EvalTolerance(),
                   cutoff: float = None,
                   sigma: float = 0.5,
                   even: bool = False,
                   max_doublings: int = 12) -> QuadResult:
    """Integral over the real line or a vertical line Re s = sigma.

    real_line:      int f(t) dt, f vectorized over t.
    vertical_line:  int f(s) ds upward along Re s = sigma, i.e.
                    i * int f(sigma + i t) dt.

    If `cutoff` is given, integration runs over |t| <= cutoff and the tail
    is assumed controlled by the caller (folded into the estimate as the
    magnitude of the last octave).  Otherwise the range doubles until the
    newest block is negligible; blocks that stop decaying raise
    TailNotDecaying.
    """
    if kind not in ("real_line", "vertical_line"):
        raise ValueError("kind must be real_line or vertical_line")

    if kind == "vertical_line":
        base = f

        def g(ts: np.ndarray) -> np.ndarray:
            return base(sigma + 1j * np.asarray(ts))
    else:
        g = f

    def block(a: float, b: float, btol: EvalTolerance):
        return _adaptive(g, a, b, btol, initial_panels=8)

    def finish(value: complex, err: float, work: int) -> QuadResult:
        if even:
            value, err = 2.0 * value, 2.0 * err
        if kind == "vertical_line":
            value = 1j * value
        return QuadResult(value=value, error=err, work=work)

    half = tol.tighter(0.5)
    if cutoff is not None:
        if even:
            v, e, w = block(0.0, cutoff, half)
        else:
            v, e, w = block(-cutoff, cutoff, half)
        # tail indicator: contribution of the last 20% of the range
        vt, _, wt = block(0.8 * cutoff, cutoff, EvalTolerance(1e-8, 1e-4, 4000))
        return finish(v, e + 0.5 * abs(vt), w + wt)

    # automatic doubling on the half/full line
    c = 8.0
    if even:
        v, e, w = block(0.0, c, half)
    else:
        v, e, w = block(-c, c, half)
    prev_block = abs(v) + 1.0
    for _ in range(max_doublings):
        vb, eb, wb = block(c, 2.0 * c, half)
        if not even:
            vb2, eb2, wb2 = block(-2.0 * c, -c, half)
            vb, eb, wb = vb + vb2, eb + eb2, wb + wb2
        v += vb
        e += eb
        w += wb
        c *= 2.0
        if abs(vb) <= 0.25 * tol.target(abs(v)):
            return finish(v, e + abs(vb), w)
        if abs(vb) > 0.7 * prev_block and abs(vb) > tol.target(abs(v)):
            raise TailNotDecaying(f"line blocks not decaying near |t|={c}")
        prev_block = abs(vb)
    raise TailNotDecaying("line integral did not converge within doubling budget")
