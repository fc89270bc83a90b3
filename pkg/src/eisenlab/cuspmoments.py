"""Twisted second moments of the truncated Eisenstein series over the cusp
strip, computed by two independent routes, plus the residue catalogue of
the associated Mellin integrand and the five-piece difference identity.

The central object is

    I_eta = int_{C_A} y^(1+eta) xi^2(1+2Ti) E_A^2(z, 1/2+iT) dmu(z),
    eta in {0, +2Ti, -2Ti}.

Route one is the Parseval mode sum (regularize.cusp_parseval).  Route two
rewrites I_eta as a Mellin-Barnes contour integral

    (1/2 pi i) int_(4) A^(1-s)/(s-1)
        xi^2(s+eta) xi(s+eta+2Ti) xi(s+eta-2Ti) / xi(2s+2eta) ds

and shifts the line to Re s = 1/2, collecting residues: the eta = 0
integrand has simple poles at 1 +- 2Ti and a triple pole at 1; the
eta = +-2Ti integrands have a simple pole at 1 -+ 4Ti and double poles at
1 and 1 -+ 2Ti.  All residues are closed forms in xi-data, including the
Laurent constants a, b of xi at 1.

The difference identity relates the regularized fourth moment to the
truncated fourth moment by three bridge terms, a cubic cross term with no
closed form (computed by Parseval in x and one y-integral over triple
kernel mode sums), and the explicit antiderivative correction.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass

import numpy as np

from . import specfun
from .eisenstein import EisenSeries
from .errors import ConfigError
from .quad import integrate_D_A, integrate_interval, integrate_line, integrate_strip
from .regularize import (
    CuspModes,
    PhiProfile,
    RegularizedValue,
    cusp_cutoff,
    cusp_parseval,
    phi_hat,
    profile_of_power,
    regularized_integral,
)
from .report import MomentReport
from .util import EvalTolerance, parallel_map

__all__ = [
    "EtaCase",
    "ResidueCatalogue",
    "residue_catalogue",
    "i_eta_direct",
    "i_eta_spectral",
    "bridge_from_residues_normalized",
    "difference_assembly",
    "cauchy_schwarz_check",
    "regularized_fourth_moment_lhs",
    "eisenstein_fourth_profile",
]


@dataclass(frozen=True)
class EtaCase:
    """One of the three supported twist parameters eta in {0, +2Ti, -2Ti}."""

    kind: str          # "zero", "plus", "minus"
    T: float
    A: float

    def __post_init__(self):
        if self.kind not in ("zero", "plus", "minus"):
            raise ConfigError("eta kind must be zero, plus or minus")
        if not self.A > 1.0:
            raise ConfigError("need A > 1")
        if not self.T > 0.0:
            raise ConfigError("need T > 0")

    @property
    def eta(self) -> complex:
        if self.kind == "zero":
            return 0.0 + 0.0j
        return 2j * self.T if self.kind == "plus" else -2j * self.T


@dataclass(frozen=True)
class ResidueCatalogue:
    """Map pole location -> residue for one twist case."""

    case: EtaCase
    entries: dict

    def total(self) -> complex:
        return sum(self.entries.values())


def _xil(s) -> complex:
    return specfun.xi_log(s)


def _xexp(*signed_logs) -> complex:
    """exp of a signed sum of xi-logs given as (sign, argument) pairs."""
    acc = 0.0 + 0.0j
    for sign, arg in signed_logs:
        acc += sign * _xil(arg)
    return cmath.exp(acc)


def residue_catalogue(case: EtaCase) -> ResidueCatalogue:
    """Closed-form residues of the shifted-contour integrand.

    Every entry is assembled from xi-values, xi log-derivatives at the
    listed arguments, and the Laurent data (a, b) of xi at 1.
    """
    T, A = case.T, case.A
    lnA = math.log(A)
    laur = specfun.xi_laurent_exact()
    a, b = laur.a, laur.b
    u = specfun.xi_logderiv(1 + 2j * T, 1)       # xi'/xi(1+2Ti)
    v = specfun.xi_logderiv(2.0, 1).real         # xi'/xi(2)
    xi2_2 = specfun.xi_logderiv(2.0, 2).real     # xi''/xi(2)
    entries = {}
    if case.kind == "zero":
        entries["1-2Ti"] = (
            -cmath.exp(2j * T * lnA) / (2j * T)
            * _xexp((2, 1 - 2j * T), (1, 1 - 4j * T), (-1, 2 - 4j * T)))
        entries["1+2Ti"] = (
            cmath.exp(-2j * T * lnA) / (2j * T)
            * _xexp((2, 1 + 2j * T), (1, 1 + 4j * T), (-1, 2 + 4j * T)))
        xi_abs2 = math.exp(2.0 * _xil(1 + 2j * T).real)
        u2 = specfun.xi_logderiv(1 + 2j * T, 2)
        bracket = (abs(u) ** 2 + u2.real + 0.5 * lnA * lnA
                   - 2.0 * lnA * u.real
                   + 2.0 * (v - a) * (lnA - 2.0 * u.real)
                   + 4.0 * v * v - 4.0 * a * v + a * a + 2.0 * b
                   - 2.0 * xi2_2)
        entries["1 (triple)"] = xi_abs2 / (math.pi / 6.0) * bracket
        return ResidueCatalogue(case=case, entries=entries)

    if case.kind == "plus":
        entries["1-4Ti"] = (
            -cmath.exp(4j * T * lnA) / (4j * T)
            * _xexp((2, 1 - 2j * T), (1, 1 - 4j * T), (-1, 2 - 4j * T)))
        entries["1 (double)"] = (
            _xexp((2, 1 + 2j * T), (1, 1 + 4j * T), (-1, 2 + 4j * T))
            * (a - lnA + specfun.xi_logderiv(1 + 4j * T, 1)
               + 2.0 * u - 2.0 * specfun.xi_logderiv(2 + 4j * T, 1)))
        entries["1-2Ti (double)"] = (
            -cmath.exp(2j * T * lnA) / (2j * T)
            * _xexp((1, 1 + 2j * T), (1, 1 - 2j * T)) / (math.pi / 6.0)
            * (2.0 * u.real - lnA + 1.0 / (2j * T) + 2.0 * a - 2.0 * v))
        return ResidueCatalogue(case=case, entries=entries)

    # minus case: conjugate partners of the plus case
    entries["1+4Ti"] = (
        cmath.exp(-4j * T * lnA) / (4j * T)
        * _xexp((2, 1 + 2j * T), (1, 1 + 4j * T), (-1, 2 + 4j * T)))
    entries["1 (double)"] = (
        _xexp((2, 1 - 2j * T), (1, 1 - 4j * T), (-1, 2 - 4j * T))
        * (a - lnA + specfun.xi_logderiv(1 - 4j * T, 1)
           + 2.0 * u.conjugate() - 2.0 * specfun.xi_logderiv(2 - 4j * T, 1)))
    entries["1+2Ti (double)"] = (
        cmath.exp(-2j * T * lnA) / (2j * T)
        * _xexp((1, 1 + 2j * T), (1, 1 - 2j * T)) / (math.pi / 6.0)
        * (2.0 * u.real - lnA - 1.0 / (2j * T) + 2.0 * a - 2.0 * v))
    return ResidueCatalogue(case=case, entries=entries)


# ---------------------------------------------------------------------
# the two routes
# ---------------------------------------------------------------------

def _eisen_modes(T: float) -> CuspModes:
    n = max(1, int((math.pi * T / 2.0 + 45.0) / (2.0 * math.pi)) + 1)
    return CuspModes.eisenstein(T, n)


def i_eta_direct(case: EtaCase,
                 tol: EvalTolerance = EvalTolerance(1e-11, 1e-11, 100000)) -> complex:
    """I_eta as the certified Parseval mode sum over the cusp strip."""
    if case.T > 30.0 + 1e-9:
        raise ConfigError("direct route certified for T <= 30")
    return cusp_parseval(_eisen_modes(case.T), case.A, case.eta, tol=tol)


def i_eta_spectral(case: EtaCase,
                   tol: EvalTolerance = EvalTolerance(1e-10, 1e-9, 600000)) -> complex:
    """I_eta as residues plus the shifted vertical-line integral on Re s = 1/2."""
    T, A, eta = case.T, case.A, case.eta
    lnA = math.log(A)

    def integrand(s_arr: np.ndarray) -> np.ndarray:
        s = np.asarray(s_arr, dtype=complex)
        w = (2.0 * specfun.xi_log_array(s + eta)
             + specfun.xi_log_array(s + eta + 2j * T)
             + specfun.xi_log_array(s + eta - 2j * T)
             - specfun.xi_log_array(2.0 * s + 2.0 * eta))
        return np.exp((1.0 - s) * lnA + w) / (s - 1.0)

    cutoff = 4.0 * T + 30.0 + 10.0 * math.log(max(T, 2.0))
    line = integrate_line(integrand, "vertical_line", tol=tol,
                          sigma=0.5, cutoff=cutoff)
    contour = line.value / (2j * math.pi)
    return residue_catalogue(case).total() + contour


def bridge_from_residues_normalized(T: float, A: float) -> float:
    """The residue part of 12 I_0/|xi|^2 + 6 I_+/xi^2(1-2Ti) + 6 I_-/xi^2(1+2Ti),
    assembled entirely in log space so it remains computable for scalar
    sweeps far beyond the kernel-certified T range (used for the 36/pi
    leading-coefficient check).
    """
    T, A = float(T), float(A)
    lnA = math.log(A)
    laur = specfun.xi_laurent_exact()
    a, b = laur.a, laur.b
    u = specfun.xi_logderiv(1 + 2j * T, 1)
    v = specfun.xi_logderiv(2.0, 1).real
    xi2_2 = specfun.xi_logderiv(2.0, 2).real
    u2 = specfun.xi_logderiv(1 + 2j * T, 2)
    six_over_pi = 6.0 / math.pi

    # eta = 0 block over |xi(1+2Ti)|^2
    bracket0 = (abs(u) ** 2 + u2.real + 0.5 * lnA * lnA
                - 2.0 * lnA * u.real + 2.0 * (v - a) * (lnA - 2.0 * u.real)
                + 4.0 * v * v - 4.0 * a * v + a * a + 2.0 * b - 2.0 * xi2_2)
    zero_part = six_over_pi * bracket0
    r_m = (-cmath.exp(2j * T * lnA) / (2j * T)
           * cmath.exp(_xil(1 - 2j * T) - _xil(1 + 2j * T)
                       + _xil(1 - 4j * T) - _xil(2 - 4j * T)))
    zero_part += 2.0 * r_m.real
    zero_total = 12.0 * zero_part

    # eta = +2Ti block over xi^2(1-2Ti); its conjugate is the minus block
    p1 = (-cmath.exp(4j * T * lnA) / (4j * T)
          * cmath.exp(_xil(1 - 4j * T) - _xil(2 - 4j * T)))
    p2 = (cmath.exp(2.0 * (_xil(1 + 2j * T) - _xil(1 - 2j * T))
                    + _xil(1 + 4j * T) - _xil(2 + 4j * T))
          * (a - lnA + specfun.xi_logderiv(1 + 4j * T, 1)
             + 2.0 * u - 2.0 * specfun.xi_logderiv(2 + 4j * T, 1)))
    p3 = (-cmath.exp(2j * T * lnA) / (2j * T) * six_over_pi
          * cmath.exp(_xil(1 + 2j * T) - _xil(1 - 2j * T))
          * (2.0 * u.real - lnA + 1.0 / (2j * T) + 2.0 * a - 2.0 * v))
    plus_total = 6.0 * (p1 + p2 + p3)
    return float(zero_total + 2.0 * plus_total.real)


# ---------------------------------------------------------------------
# fourth-moment quadrature pieces
# ---------------------------------------------------------------------

def eisenstein_fourth_profile(T: float) -> PhiProfile:
    """Growth profile of |E(z, 1/2+iT)|^4 (five terms, exponents 2 -+ 4Ti,
    2 -+ 2Ti and 2)."""
    s = 0.5 + 1j * float(T)
    return profile_of_power([s, s.conjugate(), s, s.conjugate()])


def regularized_fourth_moment_lhs(T: float, A: float,
                                  tol: float = 1e-7) -> RegularizedValue:
    """Regularized integral of |E(z, 1/2 + iT)|^4 by direct quadrature."""
    ser = EisenSeries(0.5 + 1j * float(T))
    prof = eisenstein_fourth_profile(T)

    def f_row(y, xs):
        v = ser.eval_row(y, xs)
        m = (v * np.conj(v)).real
        return m * m

    return regularized_integral(
        f_row, prof, A,
        tol=EvalTolerance(tol, tol, 600000),
        row=True, even_x=True, x_panels=max(6, ser.n_terms),
        y_cut=cusp_cutoff(2.0 * A, T))


def _w_row_factory(T: float):
    """Row evaluator for W = xi(1+2Ti) E_A on the cusp strip (real)."""
    modes = _eisen_modes(T)
    a = np.asarray(modes.a)
    n = np.arange(1, len(a) + 1)
    u_cut = math.pi * T / 2.0 + 45.0
    scale = math.exp(-math.pi * T / 2.0)

    def coeffs(y: float) -> np.ndarray:
        table = specfun.kbessel_table(float(T), 2.0, float(max(u_cut, 12.0)))
        return scale * a * math.sqrt(y) * table(2.0 * math.pi * y * n)

    def w_row(y: float, xs: np.ndarray) -> np.ndarray:
        c = coeffs(y)
        return c @ np.cos(2.0 * math.pi * np.outer(n, xs))

    return w_row, coeffs, n


def cubic_cross_term(T: float, A: float,
                     tol: EvalTolerance = EvalTolerance(1e-10, 1e-10, 120000)) -> float:
    """2 int_{C_A} (|E_A|^2 conj(E_A) e + |E_A|^2 E_A conj(e)) dmu.

    Parseval in x reduces the angular integral of W^3 to a double mode sum
    (cos n1 cos n2 cos n3 integrates to 1/4 on n3 = n1+n2 or |n1-n2|);
    what remains is a single rapidly-convergent y-integral.  W^3 carries
    1/xi^3-normalization restored through the scalar weight
    Re[e(y) / (xi^2(1+2Ti) xi(1-2Ti))].
    """
    T, A = float(T), float(A)
    _, coeffs, n = _w_row_factory(T)
    N = len(n)
    c_norm = cmath.exp(-2.0 * _xil(1 + 2j * T) - _xil(1 - 2j * T))
    phi_c = cmath.exp(_xil(1 - 2j * T) - _xil(1 + 2j * T))  # scattering value
    y_cut = cusp_cutoff(A, 3.0 * T)

    def g(y: float) -> float:
        # Re[conj(e(y, 1/2+iT)) * c_norm];
        # conj(e) = y^(1/2-iT) + conj(phi) y^(1/2+iT)
        ylog = math.log(y)
        e_bar = (cmath.exp((0.5 - 1j * T) * ylog)
                 + phi_c.conjugate() * cmath.exp((0.5 + 1j * T) * ylog))
        return (e_bar * c_norm).real

    def cube_sum(y: float) -> float:
        c = coeffs(y)
        total = 0.0
        for i in range(N):
            if c[i] == 0.0:
                continue
            for j in range(N):
                if c[j] == 0.0:
                    continue
                s = 0.0
                k_plus = i + j + 2   # n_i + n_j
                if k_plus <= N:
                    s += c[k_plus - 1]
                k_minus = abs(i - j)  # |n_i - n_j|
                if k_minus >= 1 and i != j:
                    s += c[k_minus - 1]
                total += c[i] * c[j] * s
        return 0.25 * total

    def integrand(ys: np.ndarray) -> np.ndarray:
        return np.array([cube_sum(float(y)) * g(float(y)) / (y * y) for y in ys])

    r = integrate_interval(integrand, A, y_cut, tol=tol)
    return 4.0 * float(r.value.real)


def difference_assembly(T: float, A: float,
                        forms_tol: float = 1e-8,
                        tol: float = 1e-5) -> MomentReport:
    """Five-piece identity linking the regularized and truncated fourth
    moments:

      (i)  regularized int |E|^4            (quadrature route)
      (ii) int_X |E_A|^4                    (bulk + strip quadrature)
      (iii) 12 I_0/|xi|^2 + 6 I_+/xi^2(1-2Ti) + 6 I_-/xi^2(1+2Ti)
      (iv) cubic cross term                 (Parseval + 1D quadrature)
      (v)  PhiHat(A)

    asserts (i) - (ii) = (iii) + (iv) - (v) within the combined estimate.
    """
    t0 = time.time()
    T, A = float(T), float(A)
    ser = EisenSeries(0.5 + 1j * T)
    prof = eisenstein_fourth_profile(T)

    lhs_reg = regularized_fourth_moment_lhs(T, A, tol=tol / 8.0)

    def f4_row(y, xs):
        v = ser.eval_row(y, xs)
        m = (v * np.conj(v)).real
        return m * m

    def f4_trunc_row(y, xs):
        v = ser.eval_row(y, xs, truncate_A=A)
        m = (v * np.conj(v)).real
        return m * m

    qtol = EvalTolerance(tol / 8.0, tol / 8.0, 600000)
    bulk = integrate_D_A(f4_row, A, tol=qtol, row=True, even_x=True,
                         x_panels=max(6, ser.n_terms))
    strip4 = integrate_strip(f4_trunc_row, A, cusp_cutoff(A, T), tol=qtol,
                             row=True, even_x=True,
                             x_panels=max(6, ser.n_terms))
    truncated4 = bulk.value.real + strip4.value.real

    i0 = i_eta_direct(EtaCase("zero", T, A))
    ip = i_eta_direct(EtaCase("plus", T, A))
    im = i_eta_direct(EtaCase("minus", T, A))
    xi_abs2 = math.exp(2.0 * _xil(1 + 2j * T).real)
    inv_m2 = cmath.exp(-2.0 * _xil(1 - 2j * T))
    inv_p2 = cmath.exp(-2.0 * _xil(1 + 2j * T))
    bridge = (12.0 * i0 / xi_abs2 + 6.0 * ip * inv_m2 + 6.0 * im * inv_p2).real

    cubic = cubic_cross_term(T, A)
    phat = phi_hat(prof, A).real

    route_a = lhs_reg.value.real - truncated4
    route_b = bridge + cubic - phat
    combined = (tol + 4.0 * (lhs_reg.error + bulk.error + strip4.error)
                + 2.0 * lhs_reg.discrepancy_across_A)
    return MomentReport(
        label=f"difference-identity T={T} A={A}",
        route_a=route_a,
        route_b=route_b,
        tol=combined,
        seconds=time.time() - t0,
        components={
            "regularized": lhs_reg.value,
            "truncated_fourth": truncated4,
            "bridge": bridge,
            "cubic": cubic,
            "phi_hat": phat,
            "I_0": i0, "I_plus": ip, "I_minus": im,
        },
    )


def cauchy_schwarz_check(T: float, A: float,
                         tol: float = 1e-6) -> MomentReport:
    """Cauchy-Schwarz control of the cubic cross term:

        |cubic| <= 4 sqrt(int_{C_A} |E_A|^4) sqrt(int_{C_A} |e E_A|^2).

    route_a is the ratio |cubic| / bound (must be <= 1); route_b is the
    bound normalizer 1.  Components carry both factors.
    """
    t0 = time.time()
    T, A = float(T), float(A)
    ser = EisenSeries(0.5 + 1j * T)

    def f4_trunc_row(y, xs):
        v = ser.eval_row(y, xs, truncate_A=A)
        m = (v * np.conj(v)).real
        return m * m

    strip4 = integrate_strip(f4_trunc_row, A, cusp_cutoff(A, T),
                             tol=EvalTolerance(tol / 4, tol / 4, 400000),
                             row=True, even_x=True,
                             x_panels=max(6, ser.n_terms))
    q4 = strip4.value.real

    i0 = i_eta_direct(EtaCase("zero", T, A))
    ip = i_eta_direct(EtaCase("plus", T, A))
    im = i_eta_direct(EtaCase("minus", T, A))
    xi_abs2 = math.exp(2.0 * _xil(1 + 2j * T).real)
    q2 = (2.0 * i0 / xi_abs2
          + ip * cmath.exp(-2.0 * _xil(1 - 2j * T))
          + im * cmath.exp(-2.0 * _xil(1 + 2j * T))).real

    cubic = cubic_cross_term(T, A)
    bound = 4.0 * math.sqrt(max(q4, 0.0)) * math.sqrt(max(q2, 0.0))
    ratio = abs(cubic) / bound if bound > 0 else math.inf
    # route_b = 0 with tol = 1 encodes "ratio bounded by 1"
    return MomentReport(
        label=f"cauchy-schwarz T={T} A={A}",
        route_a=ratio,
        route_b=0.0,
        tol=1.0,
        seconds=time.time() - t0,
        components={"cubic": cubic, "strip_fourth": q4,
                    "strip_mixed_second": q2, "bound": bound},
    )
