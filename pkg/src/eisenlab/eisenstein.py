"""Eisenstein series on the modular surface: full series, constant term,
scattering function, and the truncated series, with certified Fourier
truncation.

The Fourier expansion used everywhere is

    E(z, s) = y^s + phi(s) y^(1-s)
              + (2 / xi(2s)) sum_{n>=1} tau_{s-1/2}(n) sqrt(y)
                                        K_{s-1/2}(2 pi n y) * 2 cos(2 pi n x)

with phi(s) = xi(2s-1) / xi(2s).  On the critical line s = 1/2 + iT the
kernel order is purely imaginary and everything is assembled from the
scaled kernel e^{pi T/2} K_{iT}; the combination
4 e^{-pi T/2} / xi(1+2iT) stays polynomially sized however large T gets.

Evaluation heights are certified: the series object knows the lowest
height its term count covers, and refuses to evaluate below it.  Callers
evaluating at unreduced points should reduce first (reduce_to_fundamental)
or construct the series with an explicit lower y_min.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import NearZeroOfXi, UncertifiedTruncation
from .quad import ComplexPoint, Y_FUNDAMENTAL

__all__ = [
    "EisenParams",
    "EisenSeries",
    "scattering_phi",
    "eval_E",
    "eval_E_truncated",
    "certify_terms",
    "reduce_to_fundamental",
    "maass_selberg_rhs",
]


def reduce_to_fundamental(x: float, y: float, max_iter: int = 300):
    """Map z = x+iy to its representative in the standard fundamental domain.

    Alternates the translation x -> x - round(x) with the inversion
    z -> -1/z while |z| < 1.
    """
    if not y > 0:
        raise ValueError("need y > 0")
    for _ in range(max_iter):
        x = x - round(x)
        r2 = x * x + y * y
        if r2 >= 1.0 - 1e-15:
            return x, y
        x, y = -x / r2, y / r2
    return x, y  # numerically on the boundary; good enough downstream


def scattering_phi(s: complex) -> complex:
    """phi(s) = xi(2s - 1) / xi(2s); unimodular on Re s = 1/2."""
    s = complex(s)
    for bad in (0.0, 0.5, 1.0):
        if abs(s - bad) < 1e-12:
            raise NearZeroOfXi(f"scattering function undefined at s = {s}")
    if abs(specfun.zeta(2.0 * s)) < 1e-10:
        raise NearZeroOfXi(f"xi(2s) too close to zero at s = {s}")
    return cmath.exp(specfun.xi_log(2.0 * s - 1.0) - specfun.xi_log(2.0 * s))


def _scaled_envelope(b: float, x: float) -> float:
    """Upper bound for e^{pi b/2} |K_{ib'}(x)|, any |b'| <= b, via K_0."""
    t = math.pi * b / 2.0 - x
    if t < -700:
        return 0.0
    return math.exp(t) * math.sqrt(math.pi / (2.0 * x))


def certify_terms(y_min: float, T: float, tail_bound: float,
                  re_order: float = 0.0, coeff_scale: float = None) -> int:
    """Smallest N whose dropped Fourier tail is <= tail_bound for all y >= y_min.

    The envelope uses |tau| <= d(n) n^{|Re order|}, |K_nu| <= K_0 and
    K_0(x) <= sqrt(pi/2x) e^{-x}; the term envelope sqrt(y) e^{-2 pi n y}
    is decreasing in y on the certified range, so y = y_min is the worst
    case.  coeff_scale is the |4 / xi(2s)| e^{-pi b/2} prefactor; when not
    given it is treated as 1 (bounds the tail of the normalized series).
    """
    if y_min <= 0:
        raise ValueError("y_min must be positive")
    b = abs(float(T))
    q = 1.0 if coeff_scale is None else coeff_scale
    sy = math.sqrt(max(y_min, 1.0))

    def tail(N: int) -> float:
        acc = 0.0
        n = N + 1
        while True:
            x = 2.0 * math.pi * n * y_min
            term = q * sy * len(specfun.divisors(n)) * n ** abs(re_order) \
                * _scaled_envelope(b, x)
            acc += term
            if term < 1e-3 * max(acc, 1e-300) or term == 0.0:
                return acc
            n += 1
            if n > N + 4000:
                return acc

    n0 = max(1, int(math.ceil((math.pi * b / 2.0) / (2.0 * math.pi * y_min))))
    N = n0
    while tail(N) > tail_bound:
        N += 1
        if N > 100000:
            raise UncertifiedTruncation("certification did not converge")
    return N


@dataclass(frozen=True)
class EisenParams:
    """Evaluation request: spectral parameter, term count, certified tail."""

    s: complex
    n_terms: int = 0          # 0 means: certify automatically
    tail_bound: float = 1e-12
    y_min: float = Y_FUNDAMENTAL


class EisenSeries:
    """Immutable per-parameter Eisenstein series evaluator.

    Holds the coefficient cache tau_{s-1/2}(n)/xi(2s) and a scaled-kernel
    spline; shareable across threads after construction.
    """

    def __init__(self, s: complex, n_terms: int = 0,
                 tail_bound: float = 1e-12, y_min: float = Y_FUNDAMENTAL,
                 kernel_tol: float = 1e-11):
        self.s = complex(s)
        self.nu = self.s - 0.5
        self.y_min = float(y_min)
        self.tail_bound = float(tail_bound)
        b = abs(self.nu.imag)
        self.critical = abs(self.s.real - 0.5) < 1e-14

        # coefficient prefactor 4 e^{-pi b/2} / xi(2s), assembled in log form
        self._pref = cmath.exp(math.log(4.0) - math.pi * b / 2.0
                               - specfun.xi_log(2.0 * self.s))
        self.phi = scattering_phi(self.s)

        if n_terms and n_terms > 0:
            self.n_terms = int(n_terms)
        else:
            self.n_terms = certify_terms(self.y_min, b, tail_bound,
                                         re_order=abs(self.nu.real),
                                         coeff_scale=abs(self._pref))
        self._n = np.arange(1, self.n_terms + 1)
        self._tau = np.array([specfun.tau(self.nu, int(n)) for n in self._n])
        if self.critical:
            self._tau = self._tau.real.astype(float)

        x_lo = 2.0 * math.pi * self.y_min * 0.999
        x_hi = math.pi * b / 2.0 + math.log(1.0 / max(tail_bound, 1e-300)) + 18.0
        order = None if self.critical else self.nu
        # table stores e^{pi b/2} K_nu; the e^{-pi b/2} lives in _pref
        self._table = specfun.KBesselTable(b, x_lo, max(x_hi, x_lo + 10.0),
                                           rel_tol=kernel_tol, order=order)

    # -- constant term ------------------------------------------------
    def constant_term(self, y: float) -> complex:
        ys = cmath.exp(self.s * math.log(y))
        return ys + self.phi * cmath.exp((1.0 - self.s) * math.log(y))

    # -- full series --------------------------------------------------
    def _tail_coeffs(self, y: float) -> np.ndarray:
        args = 2.0 * math.pi * y * self._n
        S = self._table(args)
        return self._pref * self._tau * math.sqrt(y) * S

    def eval_row(self, y: float, xs, truncate_A: float = None) -> np.ndarray:
        """E(x + iy, s) on an array of x at fixed height y."""
        if y < self.y_min * (1.0 - 1e-9):
            raise UncertifiedTruncation(
                f"evaluation height {y} below certified y_min {self.y_min}")
        xs = np.asarray(xs, dtype=float)
        coef = self._tail_coeffs(y)
        mat = np.cos(2.0 * math.pi * np.outer(self._n, xs))
        out = coef @ mat
        if truncate_A is None or y <= truncate_A:
            out = out + self.constant_term(y)
        return out

    def value(self, z: ComplexPoint, truncate_A: float = None) -> complex:
        return complex(self.eval_row(z.y, np.array([z.x]), truncate_A)[0])


_series_cache: dict = {}


def _get_series(params: EisenParams) -> EisenSeries:
    key = (params.s, params.n_terms, params.tail_bound, params.y_min)
    series = _series_cache.get(key)
    if series is None:
        if len(_series_cache) > 64:
            _series_cache.clear()
        series = EisenSeries(params.s, params.n_terms,
                             params.tail_bound, params.y_min)
        _series_cache[key] = series
    return series


def eval_E(z: ComplexPoint, params: EisenParams) -> complex:
    """E(z, s) by the Fourier expansion with certified truncation."""
    return _get_series(params).value(z)


def eval_E_truncated(z: ComplexPoint, A: float, params: EisenParams) -> complex:
    """Truncated series: equals E on D_A, E minus its constant term above A.

    The height comparison uses the reduced representative's y, i.e. the
    caller passes z already reduced to the fundamental domain.
    """
    if not A > 1.0:
        raise ValueError("need A > 1")
    return _get_series(params).value(z, truncate_A=A)


def maass_selberg_rhs(T: float, A: float) -> float:
    """Closed form of int_D |E_A(z, 1/2+iT)|^2 dmu:

        -phi'/phi(1/2+iT) + 2 log A
        + (A^{2iT} phi(1/2-iT) - A^{-2iT} phi(1/2+iT)) / (2iT)

    with -phi'/phi(1/2+iT) = 4 Re xi'/xi(1+2iT) (functional equation keeps
    every kernel argument on Re s = 1).
    """
    T = float(T)
    if T == 0.0:
        raise ValueError("need T != 0")
    c = cmath.exp(specfun.xi_log(1.0 - 2j * T) - specfun.xi_log(1.0 + 2j * T))
    osc = (cmath.exp(2j * T * math.log(A)) * c.conjugate()
           - cmath.exp(-2j * T * math.log(A)) * c) / (2j * T)
    main = 4.0 * specfun.xi_logderiv(1.0 + 2j * T, 1).real + 2.0 * math.log(A)
    return main + osc.real
