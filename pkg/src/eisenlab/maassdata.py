"""Maass cusp-form data: ingestion, Hecke validation, and completed
L-values by a smoothed approximate functional equation.

Dataset schema (normative, bit-exact round trip):
  CSV with header  t,epsilon,L_sym2,lambda_1,...,lambda_N   (UTF-8, '.'
  decimal, ',' separator), or a JSON array of records with keys
  "t", "epsilon", "L_sym2", "lambda" (list).  L_sym2 may be empty/null;
  it is then estimated from the coefficients and flagged low-accuracy.

Completed L-function (even forms):

    Lambda(s) = pi^(-s) Gamma((s + i t_j)/2) Gamma((s - i t_j)/2) L(s)

computed as  sum_n lam(n) [ n^(-s) W_s(n) + n^(s-1) W_{1-s}(n) ]  where

    W_s(n) = (1/2 pi i) int_{(w0)} gamma(s + w) n^(-w) e^{(w/h)^2} dw / w

and gamma(z) is the archimedean factor.  The identity holds for every
smoothing width h > 0, which gives the built-in cutoff-invariance check.
Odd forms have vanishing central value by parity; only that vanishing
path is supported for them.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import specfun
from .errors import (
    HeckeViolation,
    InsufficientCoefficients,
    ParityError,
    SchemaError,
)
from .quad import GK_NODES, GK_WEIGHTS_K

__all__ = [
    "MaassForm",
    "LValueRequest",
    "parse_dataset",
    "serialize_dataset",
    "verify_hecke",
    "lambda_completed",
    "sym2_from_coefficients",
]


@dataclass(frozen=True)
class MaassForm:
    """Hecke-Maass cusp form: spectral parameter t (eigenvalue 1/4 + t^2),
    parity epsilon (+1 even, -1 odd), Hecke eigenvalues lam(1..N) with
    lam(1) = 1 and lam(-n) = epsilon * lam(n), and L(1, sym^2)."""

    t: float
    epsilon: int
    lam: tuple
    L_sym2: float = None
    L_sym2_estimated: bool = False

    @property
    def n_coeffs(self) -> int:
        return len(self.lam)

    def lam_array(self) -> np.ndarray:
        return np.asarray(self.lam, dtype=float)

    def sym2(self) -> float:
        if self.L_sym2 is not None:
            return self.L_sym2
        return sym2_from_coefficients(self.lam_array())

    def rho1_squared(self) -> float:
        """|rho(1)|^2 = 2 cosh(pi t) / L(1, sym^2)."""
        return 2.0 * math.cosh(math.pi * self.t) / self.sym2()


@dataclass(frozen=True)
class LValueRequest:
    s: complex
    form: MaassForm
    tol: float = 1e-9
    h: float = 1.0


def verify_hecke(form: MaassForm) -> float:
    """Max residual of lam(m) lam(n) = sum_{d | (m,n)} lam(m n / d^2)."""
    lam = form.lam_array()
    N = len(lam)
    if N < 10:
        raise SchemaError("need at least 10 coefficients")

    def L(k: int) -> float:
        return lam[k - 1]

    worst = 0.0
    for m in range(2, N + 1):
        for n in range(m, N // m + 1):
            rhs = 0.0
            g = math.gcd(m, n)
            for d in specfun.divisors(g):
                rhs += L(m * n // (d * d))
            worst = max(worst, abs(L(m) * L(n) - rhs))
    return worst


def sym2_from_coefficients(lam: np.ndarray) -> float:
    """Low-accuracy L(1, sym^2) from zeta(2) * sum lam(n^2)/n.

    The Dirichlet sum converges slowly; averaged partial sums (one Cesaro
    pass) are used as mild acceleration.  Only a fallback when the dataset
    does not carry the value.
    """
    kmax = int(math.isqrt(len(lam)))
    if kmax < 3:
        raise InsufficientCoefficients("need lam up to n^2 for sym^2 estimate")
    partial = np.cumsum([lam[k * k - 1] / k for k in range(1, kmax + 1)])
    tail_avg = partial[kmax // 2:].mean()
    return float((math.pi ** 2 / 6.0) * tail_avg)


# ---------------------------------------------------------------------
# dataset io
# ---------------------------------------------------------------------

def _validate_form(t: float, eps, lam, L_sym2, hecke_tol: float) -> MaassForm:
    if eps not in (1, -1):
        raise ParityError(f"parity {eps!r} not in {{+1, -1}}")
    if not lam or abs(lam[0] - 1.0) > 1e-12:
        raise SchemaError("lambda_1 must equal 1")
    if not (t > 0):
        raise SchemaError("need t > 0")
    form = MaassForm(t=float(t), epsilon=int(eps), lam=tuple(float(v) for v in lam),
                     L_sym2=(None if L_sym2 is None else float(L_sym2)),
                     L_sym2_estimated=L_sym2 is None)
    resid = verify_hecke(form)
    if resid > hecke_tol:
        raise HeckeViolation(f"Hecke residual {resid:.3e} at t = {t}")
    return form


def parse_dataset(source, hecke_tol: float = 1e-6):
    """Load Maass forms from a CSV/JSON path, file object, or string.

    Returns forms sorted by spectral parameter t (file order preserved
    among exactly equal t).  Duplicate (t, parity) rows are rejected.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        source = str(source)
        if "\n" in source or source.lstrip().startswith(("[", "{")):
            text = source
        else:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
    text = text.strip()
    if not text:
        raise SchemaError("empty dataset")

    rows = []
    if text.startswith(("[", "{")):
        data = json.loads(text)
        if isinstance(data, dict):
            data = [data]
        for rec in data:
            try:
                rows.append((rec["t"], rec["epsilon"],
                             rec.get("L_sym2"), list(rec["lambda"])))
            except (KeyError, TypeError) as exc:
                raise SchemaError(f"bad JSON record: {exc}") from exc
    else:
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header[:3] != ["t", "epsilon", "L_sym2"] or len(header) < 4:
            raise SchemaError("CSV header must start t,epsilon,L_sym2,lambda_1,...")
        for parts in reader:
            if not parts:
                continue
            if len(parts) != len(header):
                raise SchemaError("row length does not match header")
            l2 = None if parts[2] == "" else float(parts[2])
            try:
                eps = int(parts[1])
            except ValueError as exc:
                raise ParityError(f"parity field {parts[1]!r}") from exc
            rows.append((float(parts[0]), eps, l2,
                         [float(v) for v in parts[3:]]))

    forms = []
    seen = set()
    for t, eps, l2, lam in rows:
        form = _validate_form(t, eps, lam, l2, hecke_tol)
        key = (round(form.t, 9), form.epsilon)
        if key in seen:
            raise SchemaError(f"duplicate form at t = {form.t}")
        seen.add(key)
        forms.append(form)
    forms.sort(key=lambda f: f.t)
    return forms


def serialize_dataset(forms, path=None) -> str:
    """Write forms as the normative CSV; returns the text."""
    n = max(f.n_coeffs for f in forms)
    header = ["t", "epsilon", "L_sym2"] + [f"lambda_{k}" for k in range(1, n + 1)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for f in forms:
        if f.n_coeffs != n:
            raise SchemaError("all forms must carry the same coefficient count")
        l2 = "" if (f.L_sym2 is None) else repr(f.L_sym2)
        w.writerow([repr(f.t), f.epsilon, l2] + [repr(v) for v in f.lam])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------
# completed L-values
# ---------------------------------------------------------------------

_W0 = 2.0  # contour abscissa; keeps the Dirichlet series absolutely convergent


@lru_cache(maxsize=32)
def _u_grid(h: float, n_max: int):
    """Composite GK nodes/weights on the u-line for the W-integral."""
    U = 8.0 * max(h, 1.0) + 2.0
    # panel width limited by the oscillation e^{-i u ln n}
    width = min(0.45, 2.0 / max(1.0, math.log(max(n_max, 2))))
    panels = max(24, int(2 * U / width) + 1)
    edges = np.linspace(-U, U, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * GK_NODES[None, :]).ravel()
    weights = (half[:, None] * GK_WEIGHTS_K[None, :]).ravel()
    return nodes, weights


def _w_weights(s: complex, t_j: float, ns: np.ndarray, h: float) -> np.ndarray:
    """W_s(n) for all n at once.

    W_s(n) = n^{-w0} (1/2 pi) int f(u) e^{-i u ln n} du with
    f(u) = gamma(s + w0 + iu) e^{((w0+iu)/h)^2} / (w0 + iu).
    """
    u, wt = _u_grid(h, int(ns[-1]))
    w = _W0 + 1j * u
    z = s + w
    g = np.exp(-z * math.log(math.pi)
               + specfun.gamma_ln((z + 1j * t_j) / 2.0)
               + specfun.gamma_ln((z - 1j * t_j) / 2.0))
    f = g * np.exp((w / h) ** 2) / w
    ln_n = np.log(ns.astype(float))
    phase = np.exp(-1j * np.outer(ln_n, u))
    return (phase @ (f * wt)) / (2.0 * math.pi) * ns.astype(float) ** (-_W0)


def lambda_completed(req: LValueRequest) -> complex:
    """Completed L-value Lambda(s, u_j) for an even form.

    Odd forms: only the parity-forced central vanishing is supported;
    Lambda(1/2) returns exactly 0 and other points raise
    InsufficientCoefficients (their archimedean factor differs).
    """
    form = req.form
    s = complex(req.s)
    if form.epsilon == -1:
        if abs(s - 0.5) < 1e-12:
            return 0.0 + 0.0j
        raise InsufficientCoefficients(
            "odd-form L-values supported only at the central point")
    lam = form.lam_array()
    ns = np.arange(1, len(lam) + 1)
    w_a = _w_weights(s, form.t, ns, req.h)
    w_b = _w_weights(1.0 - s, form.t, ns, req.h)
    na = np.exp(-s * np.log(ns))
    nb = np.exp((s - 1.0) * np.log(ns))
    value = complex((lam * (na * w_a + nb * w_b)).sum())

    # truncation control: |lam(n)| <= d(n) n^(1/4) envelope against the
    # computed weight magnitudes extrapolated geometrically
    n_last = len(lam)
    env_last = (len(specfun.divisors(n_last)) * n_last ** 0.25
                * (abs(na[-1] * w_a[-1]) + abs(nb[-1] * w_b[-1])))
    n_prev = max(1, n_last - 8)
    env_prev = (len(specfun.divisors(n_prev)) * n_prev ** 0.25
                * (abs(na[n_prev - 1] * w_a[n_prev - 1])
                   + abs(nb[n_prev - 1] * w_b[n_prev - 1])))
    ratio = min(0.95, (env_last / env_prev) ** (1.0 / 8.0)) if env_prev > 0 else 0.5
    tail = env_last * ratio / max(1e-12, 1.0 - ratio)
    if tail > req.tol * max(1.0, abs(value)):
        raise InsufficientCoefficients(
            f"estimated coefficient tail {tail:.2e} above tolerance "
            f"{req.tol:.2e} for s = {s}, t_j = {form.t}")
    return value
