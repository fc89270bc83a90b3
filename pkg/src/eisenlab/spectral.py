"""Spectral identities: regularized triple products, the eight-quotient
family produced by regularizing a four-fold Eisenstein product, its
removable-singularity limit, the continuous-spectrum integral, and the
assembly of the exact regularized fourth-moment evaluation.

Everything here is assembled from completed-zeta logarithms, so ratios of
exponentially large or small xi-values never leave log space until the
final exponential; any 2 pi i branch slack cancels in the exponential of a
signed sum of logs.

Notation used throughout the module: x(s) = xi'/xi(s) and
x'(s) = xi''/xi(s) - (xi'/xi(s))^2 (the derivative of x).
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import maassdata, specfun
from .errors import PoleOnPath
from .quad import integrate_line
from .report import MomentReport
from .util import EvalTolerance, parallel_map

__all__ = [
    "XiBlockInputs",
    "SpectralSummand",
    "triple_product_rhs",
    "triple_product_cusp",
    "xi_terms_general",
    "xi_terms_eta",
    "xi_block_inputs",
    "xi_block_limit",
    "f_derivatives",
    "continuous_spectrum_integral",
    "fourth_moment_rhs",
    "fourth_moment_report",
    "four_product_general_rhs",
]

_XI2 = math.pi / 6.0  # xi(2)


def _xil(s) -> complex:
    return specfun.xi_log(s)


def _guard(*args):
    for s in args:
        s = complex(s)
        if min(abs(s), abs(s - 1.0)) < 1e-8:
            raise PoleOnPath(f"xi evaluated at {s}, too close to a pole")


# ---------------------------------------------------------------------
# triple products
# ---------------------------------------------------------------------

def triple_product_rhs(s1: complex, s2: complex, s3: complex) -> complex:
    """Closed form of the regularized integral of E(z,1/2+s1) E(z,1/2+s2)
    E(z,1/2+s3):

        xi(1/2+s1+s2+s3) xi(1/2+s1-s2+s3) xi(1/2+s1+s2-s3) xi(1/2+s1-s2-s3)
        / (xi(1+2s1) xi(1+2s2) xi(1+2s3)).

    Symmetric in (s1, s2, s3) and even in each argument through the
    functional equation.
    """
    s1, s2, s3 = complex(s1), complex(s2), complex(s3)
    num = [0.5 + s1 + s2 + s3, 0.5 + s1 - s2 + s3,
           0.5 + s1 + s2 - s3, 0.5 + s1 - s2 - s3]
    den = [1.0 + 2 * s1, 1.0 + 2 * s2, 1.0 + 2 * s3]
    _guard(*num, *den)
    return cmath.exp(sum(_xil(w) for w in num) - sum(_xil(w) for w in den))


def triple_product_cusp(s1: complex, s2: complex,
                        form: maassdata.MaassForm,
                        tol: float = 1e-8) -> complex:
    """Inner product of E(z,1/2+s1) E(z,1/2+s2) against a Hecke-Maass form:

        (conj(rho(1)) / 2) Lambda(1/2+s1+s2) Lambda(1/2+s1-s2)
                          / (xi(1+2s1) xi(1+2s2)),

    zero for odd forms.  rho(1) is taken real positive (the dataset fixes
    lam(1) = 1 > 0); downstream consumers only use |rho(1)|^2.
    """
    if form.epsilon == -1:
        return 0.0 + 0.0j
    s1, s2 = complex(s1), complex(s2)
    rho = math.sqrt(form.rho1_squared())
    l1 = maassdata.lambda_completed(
        maassdata.LValueRequest(0.5 + s1 + s2, form, tol))
    l2 = maassdata.lambda_completed(
        maassdata.LValueRequest(0.5 + s1 - s2, form, tol))
    return (rho / 2.0) * l1 * l2 * cmath.exp(-_xil(1 + 2 * s1) - _xil(1 + 2 * s2))


# ---------------------------------------------------------------------
# the eight regularization quotients
# ---------------------------------------------------------------------

def xi_terms_general(s1: complex, s2: complex, s3: complex, s4: complex):
    """The eight xi-quotient terms of the regularized four-fold product
    expansion, in order of appearance.  Terms 1-4 pair the (s1, s2) product
    against the four constant-term exponents of the conjugated (s3, s4)
    pair; terms 5-8 mirror the roles.  c_j = xi(2 s_j)/xi(1 + 2 s_j);
    conjugated parameters enter as sb3 = conj(s3), sb4 = conj(s4).
    """
    s1, s2, s3, s4 = (complex(s) for s in (s1, s2, s3, s4))
    sb3, sb4 = s3.conjugate(), s4.conjugate()

    def log_c(s):
        return _xil(2 * s) - _xil(1 + 2 * s)

    def quotient(base: complex, den3: complex, extra_logs: complex,
                 da, db) -> complex:
        # prod over signs of xi(1 + d1*da + d2*db + base) over xi-denominator
        num = 0.0 + 0.0j
        for d1 in (+1, -1):
            for d2 in (+1, -1):
                w = 1.0 + d1 * da + d2 * db + base
                _guard(w)
                num += _xil(w)
        _guard(den3)
        return cmath.exp(num - _xil(den3) + extra_logs)

    l12 = -_xil(1 + 2 * s1) - _xil(1 + 2 * s2)
    l34 = -_xil(1 + 2 * sb3) - _xil(1 + 2 * sb4)
    c1, c2 = log_c(s1), log_c(s2)
    cb3, cb4 = log_c(sb3), log_c(sb4)

    out = [
        quotient(sb3 + sb4, 2 + 2 * sb3 + 2 * sb4, l12, s1, s2),
        quotient(-sb3 + sb4, 2 - 2 * sb3 + 2 * sb4, l12 + cb3, s1, s2),
        quotient(sb3 - sb4, 2 + 2 * sb3 - 2 * sb4, l12 + cb4, s1, s2),
        quotient(-sb3 - sb4, 2 - 2 * sb3 - 2 * sb4, l12 + cb3 + cb4, s1, s2),
        quotient(s1 + s2, 2 + 2 * s1 + 2 * s2, l34, sb3, sb4),
        quotient(-s1 + s2, 2 - 2 * s1 + 2 * s2, l34 + c1, sb3, sb4),
        quotient(s1 - s2, 2 + 2 * s1 - 2 * s2, l34 + c2, sb3, sb4),
        quotient(-s1 - s2, 2 - 2 * s1 - 2 * s2, l34 + c1 + c2, sb3, sb4),
    ]
    return out


def xi_terms_eta(T: float, eta: complex):
    """The eight quotients on the degenerate parameter path
    (s1, s2, s3, s4) = (iT, iT, iT, iT + conj(eta)); the sixth and seventh
    coincide there.  Each has a pole at eta = 0; the sum does not.
    """
    T = float(T)
    eta = complex(eta)
    if eta == 0:
        raise PoleOnPath("individual quotients are singular at eta = 0")
    terms = xi_terms_general(1j * T, 1j * T, 1j * T, 1j * T + eta.conjugate())
    # enforce the structural identity exactly against roundoff
    terms[6] = terms[5]
    return terms


# ---------------------------------------------------------------------
# the eta -> 0 limit in closed form
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class XiBlockInputs:
    """Scalar xi-data feeding the degenerate-block closed form at height T."""

    T: float
    xi1: complex          # xi'/xi(1+2iT)
    xi2: complex          # xi''/xi(1+2iT)
    a: float              # Laurent constant of xi at s=1
    b: float              # Laurent linear term
    xi_at_2: float        # xi(2) = pi/6
    xi1_at_2: float       # xi'/xi(2)
    xi2_at_2: float       # xi''/xi(2)
    ratio_plus: complex   # xi^2(1+2Ti) xi(1+4Ti) / (xi^2(1-2Ti) xi(2+4Ti))
    ratio_minus: complex  # conjugate partner
    xi1_2p4: complex      # xi'/xi(2+4Ti)
    xi1_1p4: complex      # xi'/xi(1+4Ti)


def xi_block_inputs(T: float) -> XiBlockInputs:
    T = float(T)
    if T <= 0:
        raise ValueError("need T > 0")
    laur = specfun.xi_laurent_exact()
    ratio_plus = cmath.exp(2 * _xil(1 + 2j * T) + _xil(1 + 4j * T)
                           - 2 * _xil(1 - 2j * T) - _xil(2 + 4j * T))
    return XiBlockInputs(
        T=T,
        xi1=specfun.xi_logderiv(1 + 2j * T, 1),
        xi2=specfun.xi_logderiv(1 + 2j * T, 2),
        a=laur.a,
        b=laur.b,
        xi_at_2=_XI2,
        xi1_at_2=specfun.xi_logderiv(2.0, 1).real,
        xi2_at_2=specfun.xi_logderiv(2.0, 2).real,
        ratio_plus=ratio_plus,
        ratio_minus=ratio_plus.conjugate(),
        xi1_2p4=specfun.xi_logderiv(2 + 4j * T, 1),
        xi1_1p4=specfun.xi_logderiv(1 + 4j * T, 1),
    )


def xi_block_limit(T: float, inputs: XiBlockInputs = None) -> float:
    """Limit of the eight-quotient sum as eta -> 0, in closed form:

        (4/xi(2)) [ Re xi''/xi(1+2Ti) + 2 |xi'/xi(1+2Ti)|^2
                    + Re (xi'/xi)^2 (1+2Ti)
                    + 4 (a - xi'/xi(2)) Re xi'/xi(1+2Ti)
                    + 2 (xi'/xi(2))^2 - xi''/xi(2) - 2 a xi'/xi(2) + a^2 ]
        + ratio_plus  * [2a + 4 xi'/xi(1+2Ti) - 2 xi'/xi(2+4Ti)]
        + ratio_minus * [2a + 4 xi'/xi(1-2Ti) - 2 xi'/xi(2-4Ti)].

    The last two lines are complex conjugates, so the total is real.
    """
    d = inputs if inputs is not None else xi_block_inputs(T)
    u = d.xi1
    v = d.xi1_at_2
    bracket = (d.xi2.real + 2.0 * abs(u) ** 2 + (u * u).real
               + 4.0 * (d.a - v) * u.real
               + 2.0 * v * v - d.xi2_at_2 - 2.0 * d.a * v + d.a * d.a)
    line1 = (4.0 / d.xi_at_2) * bracket
    osc = d.ratio_plus * (2.0 * d.a + 4.0 * u - 2.0 * d.xi1_2p4)
    return line1 + 2.0 * osc.real


def f_derivatives(T: float) -> dict:
    """F_j(0), F_j'(0) and the second derivatives entering the limit.

    The F_j are the quotients with their singular xi(1 +- eta) factors
    stripped.  Derivatives come from symbolic differentiation of the
    displayed definitions in terms of x = xi'/xi and its derivative
    x' = xi''/xi - x^2 at the listed arguments (never finite differences).
    """
    T = float(T)
    xp = specfun.xi_logderiv(1 + 2j * T, 1)          # x(1+2Ti)
    xm = xp.conjugate()
    x2 = specfun.xi_logderiv(2.0, 1).real
    xp4 = specfun.xi_logderiv(1 + 4j * T, 1)
    xm4 = xp4.conjugate()
    x2p4 = specfun.xi_logderiv(2 + 4j * T, 1)
    x2m4 = x2p4.conjugate()
    xpp = specfun.xi_logderiv(1 + 2j * T, 2) - xp * xp    # x'(1+2Ti)
    xpm = xpp.conjugate()
    xp2 = specfun.xi_logderiv(2.0, 2).real - x2 * x2       # x'(2)

    R1 = cmath.exp(2 * _xil(1 - 2j * T) + _xil(1 - 4j * T)
                   - 2 * _xil(1 + 2j * T) - _xil(2 - 4j * T))
    R4 = R1.conjugate()
    inv2 = 1.0 / _XI2

    F0 = {1: R1, 2: inv2, 3: inv2, 4: R4, 5: R4, 6: inv2, 8: R1}
    F1 = {
        1: R1 * (2 * xm + xm4 - 2 * x2m4),
        2: inv2 * (2 * xp.real - 2 * x2) * 1.0,
        3: inv2 * (2 * x2 - 6 * xp.real),
        4: R4 * (-4 * xp - xp4 - 2 * xm + 2 * x2p4),
        5: R4 * (-xp4 - 2 * xm),
        6: inv2 * (-2 * xp.real),
        8: R1 * (xm4 - 2 * xm),
    }
    L2 = 2 * xp.real - 2 * x2
    L2p = 2 * xpp.real - 4 * xp2
    L3 = -6 * xp.real + 2 * x2
    L3p = 5 * xpp - 3 * xpm - 4 * xp2
    L6 = -2 * xp.real
    L6p = xpp - 3 * xpm
    F2 = {
        2: inv2 * (L2 * L2 + L2p),
        3: inv2 * (L3 * L3 + L3p),
        6: inv2 * (L6 * L6 + L6p),
    }
    return {"F0": F0, "F1": F1, "F2": F2}


def xi_block_limit_from_f(T: float) -> complex:
    """The same limit assembled from the F_j derivative calculus:

        a (F1 + F4 + F5 + F8)(0) + a^2 (F2 + F3 + 2 F6)(0)
        + F1'(0) - F4'(0) + F5'(0) - F8'(0) + 2a (F2'(0) - F3'(0))
        + F2''(0)/2 + F3''(0)/2 - F6''(0).

    Used as an internal cross-check of the closed form.
    """
    a = specfun.xi_laurent_exact().a
    d = f_derivatives(T)
    F0, F1, F2 = d["F0"], d["F1"], d["F2"]
    return (a * (F0[1] + F0[4] + F0[5] + F0[8])
            + a * a * (F0[2] + F0[3] + 2 * F0[6])
            + F1[1] - F1[4] + F1[5] - F1[8]
            + 2 * a * (F1[2] - F1[3])
            + 0.5 * F2[2] + 0.5 * F2[3] - F2[6])


# ---------------------------------------------------------------------
# continuous spectrum
# ---------------------------------------------------------------------

def continuous_spectrum_integral(T: float,
                                 tol: EvalTolerance = EvalTolerance(1e-10, 1e-9, 400000),
                                 cutoff: float = None):
    """(1/4 pi) int_R xi^4(1/2+ti) xi^2(1/2+(t+2T)i) xi^2(1/2+(t-2T)i)
                      / (|xi(1+2ti)|^2 |xi(1+2Ti)|^4) dt.

    The integrand is even and nonnegative (all xi factors on the critical
    line are real and enter squared); it is O(1)-scaled on |t| <= 2T and
    decays like e^{-pi(|t|-2T)} beyond, so integration is truncated at
    3T + 40 log T by default.  Returns a QuadResult-like pair
    (value, error_estimate).
    """
    T = float(T)
    if cutoff is None:
        cutoff = 3.0 * T + 40.0 * math.log(max(T, 2.0))
    den4 = 4.0 * specfun.xi_log(1.0 + 2j * T).real

    def integrand(ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        with np.errstate(divide="ignore"):
            L = (4.0 * specfun.xi_log_array(0.5 + 1j * ts).real
                 + 2.0 * specfun.xi_log_array(0.5 + 1j * (ts + 2 * T)).real
                 + 2.0 * specfun.xi_log_array(0.5 + 1j * (ts - 2 * T)).real
                 - 2.0 * specfun.xi_log_array(1.0 + 2j * ts).real
                 - den4)
        return np.exp(L)

    r = integrate_line(integrand, "real_line", tol=tol, cutoff=cutoff, even=True)
    return r.value.real / (4.0 * math.pi), r.error / (4.0 * math.pi)


# ---------------------------------------------------------------------
# fourth-moment assembly
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralSummand:
    """One cusp-form contribution to the fourth-moment identity."""

    t_j: float
    weight: float            # cosh(pi t_j) / 2
    L_sym2: float
    lambda_half: float       # Lambda(1/2)
    lambda_shift: complex    # Lambda(1/2 + 2Ti)
    value: float = 0.0


def _summand(T: float, form: maassdata.MaassForm, xi_norm: float,
             tol: float) -> SpectralSummand:
    weight = math.cosh(math.pi * form.t) / 2.0
    if form.epsilon == -1:
        return SpectralSummand(t_j=form.t, weight=weight, L_sym2=form.sym2(),
                               lambda_half=0.0, lambda_shift=0.0, value=0.0)
    lam_half = maassdata.lambda_completed(
        maassdata.LValueRequest(0.5, form, tol)).real
    lam_shift = maassdata.lambda_completed(
        maassdata.LValueRequest(0.5 + 2j * T, form, tol))
    value = (weight * abs(lam_shift) ** 2 * lam_half ** 2
             / (form.sym2() * xi_norm))
    return SpectralSummand(t_j=form.t, weight=weight, L_sym2=form.sym2(),
                           lambda_half=lam_half, lambda_shift=lam_shift,
                           value=value)


def fourth_moment_rhs(T: float, forms, tol: float = 1e-8) -> dict:
    """Assembled right-hand side of the exact fourth-moment evaluation:

        sum over cusp forms + continuous-spectrum integral + block limit.

    Returns a dict with the three components, per-form summands, and the
    cusp-tail truncation indicator |last included summand| * 10 (a
    heuristic, no unconditional bound is claimed).
    """
    T = float(T)
    forms = sorted(forms, key=lambda f: f.t)
    xi_norm = math.exp(4.0 * specfun.xi_log(1.0 + 2j * T).real)
    summands = parallel_map(lambda f: _summand(T, f, xi_norm, tol), forms)
    cusp = math.fsum(s.value for s in summands)
    cont, cont_err = continuous_spectrum_integral(T)
    block = xi_block_limit(T)
    nonzero = [s for s in summands if s.value != 0.0]
    tail = 10.0 * nonzero[-1].value if nonzero else math.inf
    return {
        "cusp_sum": cusp,
        "continuous": cont,
        "continuous_error": cont_err,
        "block": block,
        "total": cusp + cont + block,
        "summands": summands,
        "cusp_tail_estimate": tail,
    }


def fourth_moment_report(T: float, forms, A: float = 2.0,
                         tol: float = 1e-6,
                         quad_tol: float = None) -> MomentReport:
    """End-to-end check: regularized quadrature of |E(z, 1/2+iT)|^4 against
    the assembled spectral side.

    The report tolerance combines the quadrature error estimate, the
    A-independence discrepancy, the continuous-spectrum estimate, and the
    cusp tail indicator; the components dict carries every piece so the
    residual-vs-tail comparison can be printed.
    """
    from .cuspmoments import regularized_fourth_moment_lhs

    t0 = time.time()
    lhs = regularized_fourth_moment_lhs(T, A, tol=quad_tol or tol / 5.0)
    rhs = fourth_moment_rhs(T, forms, tol=tol / 10.0)
    combined = (4.0 * lhs.error + 2.0 * lhs.discrepancy_across_A
                + rhs["continuous_error"] + rhs["cusp_tail_estimate"] + tol)
    return MomentReport(
        label=f"fourth-moment T={T} A={A} forms={len(forms)}",
        route_a=lhs.value.real,
        route_b=rhs["total"],
        tol=combined,
        seconds=time.time() - t0,
        components={
            "lhs_quadrature": lhs.value,
            "lhs_error": lhs.error,
            "lhs_A_discrepancy": lhs.discrepancy_across_A,
            "cusp_sum": rhs["cusp_sum"],
            "continuous": rhs["continuous"],
            "block": rhs["block"],
            "cusp_tail_estimate": rhs["cusp_tail_estimate"],
        },
    )


def four_product_general_rhs(s1: complex, s2: complex, s3: complex,
                             s4: complex, forms,
                             tol: float = 1e-7,
                             lvalue_tol: float = 1e-7) -> dict:
    """Right-hand side of the general four-product expansion at generic
    parameters: cusp sum + continuous integral + the eight quotients.

    The inner product pairs E_{s1} E_{s2} against E_{s3} E_{s4}; the
    conjugated pair enters through sb3 = conj(s3), sb4 = conj(s4).
    """
    s1, s2, s3, s4 = (complex(s) for s in (s1, s2, s3, s4))
    sb3, sb4 = s3.conjugate(), s4.conjugate()
    den = (_xil(1 + 2 * s1) + _xil(1 + 2 * s2)
           + _xil(1 + 2 * sb3) + _xil(1 + 2 * sb4))

    cusp = 0.0 + 0.0j
    summands = []
    for form in sorted(forms, key=lambda f: f.t):
        if form.epsilon == -1:
            summands.append(0.0)
            continue
        req = lambda s: maassdata.lambda_completed(
            maassdata.LValueRequest(s, form, lvalue_tol))
        val = (math.cosh(math.pi * form.t) / 2.0 / form.sym2()
               * req(0.5 + s1 + s2) * req(0.5 + s1 - s2)
               * req(0.5 + sb3 + sb4) * req(0.5 + sb3 - sb4)
               * cmath.exp(-den))
        cusp += val
        summands.append(abs(val))

    def integrand(ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        acc = np.zeros(ts.shape, dtype=complex)
        for d1 in (+1, -1):
            for d2 in (+1, -1):
                acc += specfun.xi_log_array(0.5 + 1j * ts + d1 * s1 + d2 * s2)
                acc += specfun.xi_log_array(0.5 + 1j * ts + d1 * sb3 + d2 * sb4)
        acc -= 2.0 * specfun.xi_log_array(1.0 + 2j * ts).real
        acc -= den
        return np.exp(acc)

    t_big = max(abs(s.imag) for s in (s1, s2, s3, s4))
    cutoff = 6.0 * max(t_big, 1.0) + 60.0
    r = integrate_line(integrand, "real_line",
                       tol=EvalTolerance(tol / 10.0, tol / 10.0, 400000),
                       cutoff=cutoff)
    cont = r.value / (4.0 * math.pi)
    quotients = xi_terms_general(s1, s2, s3, s4)
    tail = 10.0 * (summands[-1] if summands else math.inf)
    return {
        "cusp_sum": cusp,
        "continuous": cont,
        "continuous_error": r.error / (4.0 * math.pi),
        "quotients": quotients,
        "total": cusp + cont + sum(quotients),
        "cusp_tail_estimate": tail,
    }
