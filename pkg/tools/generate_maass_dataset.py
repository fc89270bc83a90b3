#!/usr/bin/env python3
"""Generate the shipped Maass cusp-form dataset for the modular group.

Classic collocation solver: sample the automorphy condition u(z) = u(z*)
on a horocycle below the fundamental domain, project on cosine (even) or
sine (odd) modes with the discrete orthogonality of midpoint nodes, and
solve the resulting homogeneous system with lambda(1) = 1.  Eigenvalues
are located where the coefficient vectors computed at two different
horocycle heights agree; candidates are refined by Brent's method on the
signed difference of lambda(2) and validated on the higher coefficients.

Coefficients above the collocation range are extracted band by band at
lower horocycles chosen so the kernel argument stays within its accurate
window, then the whole table is regenerated multiplicatively from the
prime values so Hecke relations hold to machine precision.

L(1, sym^2) comes from the Petersson norm of the expansion via
|rho(1)|^2 = 2 cosh(pi t) / L(1, sym^2): squared-norm quadrature over the
fundamental domain (arc region 2D, strip by Parseval).

Usage:
  python tools/generate_maass_dataset.py --t-max 30.2 --n-coeffs 200 \
      --out src/eisenlab/data/maass_forms.csv
  python tools/generate_maass_dataset.py --quick     # small sanity run
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

sys.path.insert(0, "src")

from eisenlab import specfun  # noqa: E402
from eisenlab.maassdata import MaassForm, serialize_dataset, verify_hecke  # noqa: E402
from eisenlab.quad import integrate_D_A, integrate_interval  # noqa: E402
from eisenlab.util import EvalTolerance  # noqa: E402

Y1 = 0.52
Y2 = 0.44
SCAN_TOL = 3e-8   # kernel table accuracy while scanning
FINE_TOL = 1e-11  # kernel table accuracy for accepted eigenvalues


def reduce_points(x: np.ndarray, y: np.ndarray):
    """Vectorized reduction of x + iy to the fundamental domain."""
    x = x.copy()
    y = y.copy()
    for _ in range(200):
        x -= np.round(x)
        r2 = x * x + y * y
        mask = r2 < 1.0 - 1e-15
        if not mask.any():
            break
        x[mask] = -x[mask] / r2[mask]
        y[mask] = y[mask] / r2[mask]
    return x, y


class Kernel:
    """Scaled-kernel table factory with a small per-R cache."""

    def __init__(self):
        self.cache = {}

    def table(self, R: float, tol: float) -> specfun.KBesselTable:
        key = (round(R, 12), tol)
        if key not in self.cache:
            if len(self.cache) > 8:
                self.cache.clear()
            self.cache[key] = specfun.KBesselTable(
                R, 2.2, R + 60.0, rel_tol=tol)
        return self.cache[key]


KER = Kernel()


def n_modes(R: float, Y: float) -> int:
    return int(math.ceil((math.pi * R / 2.0 + 36.0) / (2.0 * math.pi * Y)))


def solve_coeffs(R: float, parity: int, Y: float, tol: float):
    """Solve the collocation system at height Y; returns (c[1..M], resid)."""
    tab = KER.table(R, tol)
    M = n_modes(R, Y)
    Q = M + 14
    j = np.arange(1, Q + 1)
    xs = (j - 0.5) / (2.0 * Q)
    xst, yst = reduce_points(xs, np.full(Q, Y))

    n = np.arange(1, M + 1)
    cs = np.cos if parity == 1 else np.sin
    # automorphic side: phi_n(z*_j) = 2 sqrt(y*) S(2 pi n y*) cs(2 pi n x*)
    args = 2.0 * math.pi * np.outer(n, yst)           # (M, Q)
    phi = 2.0 * np.sqrt(yst)[None, :] * tab(args.ravel()).reshape(M, Q) \
        * cs(2.0 * math.pi * np.outer(n, xst))
    proj = cs(2.0 * math.pi * np.outer(n, xs))        # (M_rows, Q)
    A = (2.0 / Q) * (proj @ phi.T)                    # rows m, cols n
    diag = 2.0 * math.sqrt(Y) * tab(2.0 * math.pi * Y * n)
    A[np.arange(M), np.arange(M)] -= diag

    rhs = -A[:, 0]
    sol, res, *_ = np.linalg.lstsq(A[:, 1:], rhs, rcond=None)
    resid = float(np.linalg.norm(A[:, 1:] @ sol - rhs))
    return np.concatenate([[1.0], sol]), resid


def height_mismatch(R: float, parity: int, tol: float, k_max: int = 5):
    """Signed lambda(2) difference across heights plus validation metrics.

    Only the first few coefficients enter the mismatch: higher ones carry
    an exponentially small kernel factor at these horocycles and their
    cross-height difference reflects conditioning, not the eigenvalue.
    """
    c1, r1 = solve_coeffs(R, parity, Y1, tol)
    c2, r2 = solve_coeffs(R, parity, Y2, tol)
    k = min(len(c1), len(c2), k_max)
    return c1[1] - c2[1], float(np.max(np.abs(c1[:k] - c2[:k]))), max(r1, r2)


def refine(bracket, parity: int, log):
    """Brent refinement of the lambda(2) height-difference inside a bracket."""
    from scipy.optimize import brentq

    a, b = bracket

    def f(R):
        return height_mismatch(R, parity, SCAN_TOL)[0]

    try:
        root = brentq(f, a, b, xtol=5e-11, rtol=1e-14, maxiter=80)
    except ValueError:
        return None
    # polish with the fine kernel in a tight bracket (scan-grade kernels
    # leave ~1e-8-level noise on the root)
    def f_fine(R):
        return height_mismatch(R, parity, FINE_TOL)[0]

    lo, hi = root - 3e-7, root + 3e-7
    try:
        if f_fine(lo) * f_fine(hi) < 0:
            root = brentq(f_fine, lo, hi, xtol=2e-11, rtol=1e-15, maxiter=60)
    except ValueError:
        pass
    _, mism, resid = height_mismatch(root, parity, FINE_TOL)
    log(f"    candidate R={root:.9f} mismatch={mism:.2e} lstsq={resid:.2e}")
    if mism > 2e-6 or resid > 1e-5:
        return None
    return root


def scan_parity(parity: int, r_lo: float, r_hi: float, step: float, log):
    """Locate eigenvalues of one parity by sign changes of the mismatch."""
    out = []
    grid = np.arange(r_lo, r_hi + step, step)
    prev = None
    t0 = time.time()
    for i, R in enumerate(grid):
        h2, mism, _ = height_mismatch(R, parity, SCAN_TOL)
        if prev is not None and np.isfinite(prev) and np.isfinite(h2) \
                and prev * h2 < 0:
            root = refine((grid[i - 1], R), parity, log)
            if root is not None:
                out.append(root)
                log(f"  found parity={parity:+d} t={root:.9f} "
                    f"({time.time() - t0:.0f}s)")
        prev = h2
    return out


def extend_coefficients(R: float, parity: int, c_low: np.ndarray,
                        n_target: int, log) -> np.ndarray:
    """Extract lambda(n) up to n_target from low horocycles, band by band."""
    tab = KER.table(R, FINE_TOL)
    cs = np.cos if parity == 1 else np.sin
    k_star = n_modes(R, math.sqrt(3) / 2.0)
    k_use = min(k_star, len(c_low))
    ck = c_low[:k_use]
    kk = np.arange(1, k_use + 1)

    delta = max(5.0, 2.2 * max(R, 1.0) ** (1.0 / 3.0))
    lam = np.full(n_target, np.nan)
    lam[:len(c_low)] = c_low[:n_target]
    # trust the collocation solve only while its kernel factor is healthy
    n_start = max(2, int(math.ceil((math.pi * R / 2.0 + 4.0)
                                   / (2.0 * math.pi * Y1))))
    while n_start <= n_target:
        Yb = (R + 2.0) / (2.0 * math.pi * n_start)
        n_end = min(n_target, int((R + delta) / (2.0 * math.pi * Yb)))
        Q = int(1.25 * n_end) + 16
        j = np.arange(1, Q + 1)
        xs = (j - 0.5) / (2.0 * Q)
        xst, yst = reduce_points(xs, np.full(Q, Yb))
        vals = 2.0 * np.sqrt(yst)[None, :] \
            * tab((2.0 * math.pi * np.outer(kk, yst)).ravel()).reshape(k_use, Q) \
            * cs(2.0 * math.pi * np.outer(kk, xst))
        u_star = ck @ vals                              # u(z*_j), scaled
        ns = np.arange(n_start, n_end + 1)
        hatc = (2.0 / Q) * (cs(2.0 * math.pi * np.outer(ns, xs)) @ u_star)
        kappa = 2.0 * math.sqrt(Yb) * tab(2.0 * math.pi * Yb * ns)
        lam[ns - 1] = hatc / kappa
        n_start = n_end + 1
    if np.any(~np.isfinite(lam)):
        raise RuntimeError(f"coefficient extension left gaps at R={R}")
    return lam


def multiplicative_closure(lam_raw: np.ndarray) -> np.ndarray:
    """Rebuild the table from prime data so Hecke relations hold exactly."""
    n_max = len(lam_raw)
    lam = np.ones(n_max)
    # prime powers by the recursion lam(p^(k+1)) = lam(p) lam(p^k) - lam(p^(k-1))
    sieve = np.ones(n_max + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n_max ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    primes = [p for p in range(2, n_max + 1) if sieve[p]]
    for p in primes:
        lam[p - 1] = lam_raw[p - 1]
        prev, cur = 1.0, lam_raw[p - 1]
        q = p * p
        while q <= n_max:
            prev, cur = cur, lam_raw[p - 1] * cur - prev
            lam[q - 1] = cur
            q *= p
    # composites multiplicatively
    for n in range(2, n_max + 1):
        if sieve[n]:
            continue
        # factor out the largest prime power
        m = n
        p = next(pp for pp in primes if m % pp == 0)
        q = 1
        while m % p == 0:
            m //= p
            q *= p
        if m > 1:
            lam[n - 1] = lam[q - 1] * lam[m - 1]
    return lam


def petersson_sym2(R: float, parity: int, lam: np.ndarray, log) -> float:
    """L(1, sym^2) = (1 + e^(-2 pi t)) * ||u_scaled||^2 over the surface."""
    tab = KER.table(R, FINE_TOL)
    cs = np.cos if parity == 1 else np.sin
    k_use = min(n_modes(R, math.sqrt(3) / 2.0) + 4, len(lam))
    ck = lam[:k_use]
    kk = np.arange(1, k_use + 1)

    def u_row(y, xs):
        coef = 2.0 * math.sqrt(y) * ck * tab(2.0 * math.pi * y * kk)
        return coef @ cs(2.0 * math.pi * np.outer(kk, xs))

    def u2_row(y, xs):
        v = u_row(y, xs)
        return v * v

    A = 1.5
    bulk = integrate_D_A(u2_row, A, tol=EvalTolerance(1e-10, 1e-10, 400000),
                         row=True, even_x=True, x_panels=max(8, k_use))

    def strip_integrand(ys):
        out = []
        for y in ys:
            coef = 2.0 * math.sqrt(y) * ck * tab(2.0 * math.pi * y * kk)
            out.append(0.5 * float((coef * coef).sum()) / (y * y))
        return np.array(out)

    y_cut = A + (R + 45.0) / (2.0 * math.pi)
    strip = integrate_interval(strip_integrand, A, y_cut,
                               tol=EvalTolerance(1e-11, 1e-11, 200000))
    norm2 = bulk.value.real + strip.value.real
    val = (1.0 + math.exp(-2.0 * math.pi * R)) * norm2
    log(f"    ||u||^2={norm2:.12e}  L(1,sym^2)={val:.12e} "
        f"(quad err {bulk.error + strip.error:.1e})")
    return val


def build_form(R: float, parity: int, n_coeffs: int, log) -> MaassForm:
    c1, res1 = solve_coeffs(R, parity, Y1, FINE_TOL)
    c2, _ = solve_coeffs(R, parity, Y2, FINE_TOL)
    k = min(len(c1), len(c2), 5)
    mism = float(np.max(np.abs(c1[:k] - c2[:k])))
    log(f"  t={R:.9f} parity={parity:+d}: coeff mismatch {mism:.2e}, "
        f"lstsq {res1:.2e}")
    lam_raw = extend_coefficients(R, parity, c1, n_coeffs, log)
    lam = multiplicative_closure(lam_raw)
    raw_hecke = float(np.max(np.abs(lam - lam_raw)))
    log(f"    raw-vs-multiplicative max diff {raw_hecke:.2e}")
    l2 = petersson_sym2(R, parity, lam, log)
    form = MaassForm(t=R, epsilon=parity, lam=tuple(float(v) for v in lam),
                     L_sym2=l2)
    resid = verify_hecke(form)
    log(f"    final Hecke residual {resid:.2e}")
    return form


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-min", type=float, default=9.0)
    ap.add_argument("--t-max", type=float, default=30.2)
    ap.add_argument("--n-coeffs", type=int, default=200)
    ap.add_argument("--step", type=float, default=0.02)
    ap.add_argument("--out", default="src/eisenlab/data/maass_forms.csv")
    ap.add_argument("--diag", default="tools/maass_generation_log.json")
    ap.add_argument("--quick", action="store_true",
                    help="small run: t <= 15, 60 coefficients")
    args = ap.parse_args()
    if args.quick:
        args.t_max = min(args.t_max, 15.0)
        args.n_coeffs = min(args.n_coeffs, 60)

    def log(msg):
        print(msg, flush=True)

    t_start = time.time()
    forms = []
    diag = {"eigenvalues": [], "args": vars(args)}
    for parity in (+1, -1):
        log(f"scanning parity {parity:+d} on [{args.t_min}, {args.t_max}] "
            f"step {args.step}")
        roots = scan_parity(parity, args.t_min, args.t_max, args.step, log)
        for R in roots:
            form = build_form(R, parity, args.n_coeffs, log)
            forms.append(form)
            diag["eigenvalues"].append({"t": R, "parity": parity,
                                        "L_sym2": form.L_sym2})
    forms.sort(key=lambda f: f.t)
    serialize_dataset(forms, args.out)
    diag["seconds"] = time.time() - t_start
    diag["count"] = len(forms)
    with open(args.diag, "w") as fh:
        json.dump(diag, fh, indent=1)
    log(f"wrote {len(forms)} forms to {args.out} "
        f"in {diag['seconds']:.0f}s")


if __name__ == "__main__":
    main()
