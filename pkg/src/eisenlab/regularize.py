"""Regularization engine: growth profiles, their explicit antiderivative
correction, the truncation-based regularized integral, and Parseval
integrals over the cusp strip.

A Gamma-invariant F is renormalizable when F(z) = Phi(y) + (rapid decay)
with Phi a finite sum of c/n! * y^alpha log^n y terms.  The regularized
integral is computed as

    int_{D_A} F dmu  +  int_{C_A} (F - Phi) dmu  -  PhiHat(A),

whose value is independent of the truncation height A > 1; the engine
recomputes at a second height and records the discrepancy as a built-in
cross-check.

Cusp-strip second moments are computed by Parseval over the cosine modes
of the truncated Eisenstein series: with W = xi(1+2iT) E_A real on the
strip,

    I_eta = int_{C_A} y^(1+eta) W^2 dmu
          = 8 sum_n tau_{iT}(n)^2 (2 pi n)^(-1-eta) int_{2 pi n A} S(u)^2 u^eta du
            * e^(-pi T)

in terms of the scaled kernel S = e^(pi T/2) K_{iT}.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .eisenstein import EisenSeries, maass_selberg_rhs, scattering_phi
from .errors import AlphaEqualsOne, ExponentCollision, NotRenormalizable
from .quad import integrate_D_A, integrate_interval, integrate_strip
from .report import MomentReport
from .util import EvalTolerance

__all__ = [
    "PhiProfile",
    "RegularizedValue",
    "phi_hat",
    "profile_of_power",
    "regularized_integral",
    "CuspModes",
    "cusp_parseval",
    "second_moment_report",
    "cusp_cutoff",
]


@dataclass(frozen=True)
class PhiProfile:
    """Finite growth profile sum_j (c_j / n_j!) y^(alpha_j) log^(n_j) y.

    terms: sequence of (c, alpha, n) with complex c, alpha and integer
    n >= 0.  Term count is capped at 32; exponents equal to 1 are legal in
    the container but rejected by phi_hat (AlphaEqualsOne).
    """

    terms: tuple

    def __post_init__(self):
        if len(self.terms) > 32:
            raise ValueError("profile term count exceeds 32")
        for c, alpha, n in self.terms:
            if not (isinstance(n, int) and n >= 0):
                raise ValueError("log power must be a nonnegative integer")

    def eval(self, y):
        """Phi(y); y scalar or ndarray."""
        y = np.asarray(y, dtype=float)
        ly = np.log(y)
        out = np.zeros(y.shape, dtype=complex)
        for c, alpha, n in self.terms:
            out = out + (c / math.factorial(n)) * np.exp(alpha * ly) * ly ** n
        return out if out.shape else complex(out)

    def has_alpha_one(self, tol: float = 1e-9) -> bool:
        return any(abs(alpha - 1.0) < tol for _, alpha, _ in self.terms)


@dataclass(frozen=True)
class RegularizedValue:
    """Result of a regularized integral with its A-independence check."""

    value: complex
    A_used: float
    discrepancy_across_A: float
    error: float = 0.0


def phi_hat(profile: PhiProfile, A: float) -> complex:
    """The explicit correction PhiHat(A) making the truncated integral
    A-independent:

        PhiHat(y) = sum_j c_j y^(alpha_j - 1)/(alpha_j - 1)
                        * sum_{m<=n_j} log^m y / (m! (1 - alpha_j)^(n_j - m))

    Requires every exponent != 1.
    """
    if A <= 1.0:
        raise ValueError("need A > 1")
    total = 0.0 + 0.0j
    ly = math.log(A)
    for c, alpha, n in profile.terms:
        if abs(alpha - 1.0) < 1e-9:
            raise AlphaEqualsOne(f"profile exponent {alpha} too close to 1")
        inner = 0.0 + 0.0j
        for m in range(n + 1):
            inner += ly ** m / (math.factorial(m) * (1.0 - alpha) ** (n - m))
        total += c * cmath.exp((alpha - 1.0) * ly) / (alpha - 1.0) * inner
    return total


def profile_of_power(s_list, strict: bool = False) -> PhiProfile:
    """Growth profile of a product of Eisenstein constant terms.

    s_list holds the spectral arguments w_i of the factors E(z, w_i);
    conjugated factors are expressed by passing the conjugated argument.
    The product prod_i (y^(w_i) + phi(w_i) y^(1 - w_i)) is expanded into
    2^k monomials and like exponents are merged.  With strict=True an
    exponent equal to 1 raises ExponentCollision (the antiderivative
    correction would be singular).
    """
    s_list = [complex(w) for w in s_list]
    if not 1 <= len(s_list) <= 4:
        raise ValueError("products of 1 to 4 constant terms are supported")
    phis = [scattering_phi(w) for w in s_list]
    raw: dict = {}
    for mask in range(1 << len(s_list)):
        coeff = 1.0 + 0.0j
        expo = 0.0 + 0.0j
        for i, w in enumerate(s_list):
            if mask >> i & 1:
                coeff *= phis[i]
                expo += 1.0 - w
            else:
                expo += w
        key = (round(expo.real, 10), round(expo.imag, 10))
        prev_c, prev_e = raw.get(key, (0.0 + 0.0j, expo))
        raw[key] = (prev_c + coeff, prev_e)
    terms = tuple(sorted(((c, e, 0) for c, e in raw.values()),
                         key=lambda t: (t[1].real, t[1].imag)))
    prof = PhiProfile(terms=terms)
    if strict and prof.has_alpha_one():
        raise ExponentCollision("constant-term product has an exponent 1")
    return prof


def cusp_cutoff(A: float, T: float, margin: float = 45.0) -> float:
    """Height above which every Fourier mode of the T-kernel has decayed
    below working precision: A + (T + margin) / (2 pi) + 2."""
    return A + (abs(T) + margin) / (2.0 * math.pi) + 2.0


def regularized_integral(F, profile: PhiProfile, A: float,
                         tol: EvalTolerance = EvalTolerance(1e-8, 1e-8, 200000),
                         row: bool = False,
                         even_x: bool = False,
                         x_panels: int = 8,
                         y_cut: float = None,
                         check_factor: float = 2.0) -> RegularizedValue:
    """Zagier-regularized integral of F over the modular surface.

    F as in quad.integrate_D_A (scalar on ComplexPoint, or row form with
    row=True).  The three-term combination is evaluated at A and again at
    check_factor * A; the two values' difference is recorded as
    discrepancy_across_A (they agree for genuinely renormalizable F).
    y_cut bounds the cusp-strip integration; it must be high enough that
    F - Phi is below tolerance there (use cusp_cutoff for Eisenstein
    products).
    """
    if A <= 1.0:
        raise ValueError("need A > 1")
    if profile.has_alpha_one():
        raise AlphaEqualsOne("profile has an exponent 1; regularization singular")
    if y_cut is None:
        y_cut = cusp_cutoff(A * check_factor, 10.0)

    from .quad import _as_row  # shared row adapter
    fr = _as_row(F, row)

    def strip_integrand(y, xs):
        return fr(y, xs) - profile.eval(y)

    def one(A_val: float):
        bulk = integrate_D_A(fr, A_val, tol=tol, row=True,
                             even_x=even_x, x_panels=x_panels)
        if y_cut <= A_val:
            raise NotRenormalizable("y_cut below truncation height")
        strip = integrate_strip(strip_integrand, A_val, y_cut, tol=tol,
                                row=True, even_x=even_x, x_panels=x_panels)
        corr = phi_hat(profile, A_val) if profile.terms else 0.0
        value = bulk.value + strip.value - corr
        return value, bulk.error + strip.error

    v1, e1 = one(A)
    v2, e2 = one(A * check_factor)
    return RegularizedValue(value=v1, A_used=A,
                            discrepancy_across_A=abs(v1 - v2),
                            error=e1)


# ---------------------------------------------------------------------
# Parseval over cusp-strip cosine modes
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class CuspModes:
    """Cosine-mode description of a real function on the cusp strip:

        F(z) = sum_{n>=1} a_n sqrt(y) K_{iT}(2 pi n y) cos(2 pi n x).

    For the normalized truncated Eisenstein series W = xi(1+2iT) E_A the
    coefficients are a_n = 4 tau_{iT}(n).
    """

    T: float
    a: tuple

    @classmethod
    def eisenstein(cls, T: float, n_terms: int) -> "CuspModes":
        a = tuple(4.0 * specfun.tau(1j * T, n).real for n in range(1, n_terms + 1))
        return cls(T=float(T), a=a)


def _mode_count(T: float, A: float) -> int:
    """Modes whose kernel argument 2 pi n A is still above the decay floor."""
    u_cut = math.pi * abs(T) / 2.0 + 45.0
    return max(1, int(u_cut / (2.0 * math.pi * A)) + 1)


def cusp_parseval(F_modes: CuspModes, A: float, eta: complex = 0.0,
                  tol: EvalTolerance = EvalTolerance(1e-11, 1e-11, 100000),
                  table: specfun.KBesselTable = None) -> complex:
    """int over the cusp strip y > A of y^(1+eta) F(z)^2 dmu(z).

    Parseval in x reduces the double integral to one kernel integral per
    mode; each is evaluated on the substituted variable u = 2 pi n y from
    the shared scaled-kernel table.  Modes are reduced in index order.
    """
    if A <= 1.0:
        raise ValueError("need A > 1")
    T = F_modes.T
    eta = complex(eta)
    u_cut = math.pi * abs(T) / 2.0 + 45.0
    x_lo = 2.0 * math.pi * A * 0.999
    if table is None:
        table = specfun.kbessel_table(float(T), float(x_lo),
                                      float(max(u_cut, x_lo + 5.0)))
    scale = math.exp(-math.pi * T)  # two kernels, each e^{-pi T/2} unscaled
    total = 0.0 + 0.0j
    for n, a_n in enumerate(F_modes.a, start=1):
        x_n = 2.0 * math.pi * n * A
        if x_n >= u_cut or a_n == 0.0:
            continue

        def integrand(u):
            s = table(u)
            return s * s * np.exp(eta * np.log(u))

        r = integrate_interval(integrand, x_n, u_cut, tol=tol,
                               initial_panels=max(4, int(abs(T)) // 4 + 4))
        total += 0.5 * a_n * a_n * (2.0 * math.pi * n) ** (-1.0 - eta) * r.value
    return scale * total


def second_moment_report(T: float, A: float,
                         tol: float = 1e-7) -> MomentReport:
    """Two-route check of int_D |E_A(z, 1/2 + iT)|^2 dmu.

    Route A: direct quadrature over D_A plus Parseval over the cusp strip.
    Route B: the scattering-function closed form (Maass-Selberg).
    """
    t0 = time.time()
    ser = EisenSeries(0.5 + 1j * T)
    qtol = EvalTolerance(tol / 4.0, tol / 4.0, 400000)

    def f_row(y, xs):
        v = ser.eval_row(y, xs)
        return (v * np.conj(v)).real

    bulk = integrate_D_A(f_row, A, tol=qtol, row=True, even_x=True,
                         x_panels=max(6, ser.n_terms))
    modes = CuspModes.eisenstein(T, ser.n_terms)
    i0 = cusp_parseval(modes, A, 0.0)
    xi_sq = math.exp(2.0 * specfun.xi_log(1.0 + 2j * T).real)
    route_a = bulk.value.real + (i0.real / xi_sq)
    route_b = maass_selberg_rhs(T, A)
    return MomentReport(
        label=f"second-moment T={T} A={A}",
        route_a=route_a,
        route_b=route_b,
        tol=max(tol, 4.0 * bulk.error),
        seconds=time.time() - t0,
        components={"bulk": bulk.value, "cusp": i0.real / xi_sq},
    )
