"""Explicit realizations of the degree-1 module N(a, 0, ..., 0) of sl(n+1).

Four realization kinds share one basis window ``{k : |k| <= N}``:

* ``BASE_P``   -- the undeformed action on monomials P(k) (the point a = -n),
* ``BBL_X``    -- the action on the basis x(k) with parameter a,
* ``DEFORMED_E`` -- the deformed action on e(k), obtained from BASE_P by
  adding the perturbations m^-_k, m^+_k to E_0, F_0 and (n + a) to H_0,
* ``FINITE``   -- BBL_X with a a nonnegative integer, closed on |k| <= a.

The conjugation x(k) = mu(|k|) e(k) intertwines DEFORMED_E and BBL_X.
"""
from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import sympy

from .algebra import (FLOAT, GAUSSIAN, SURD, Field, GeneratorId, MultiIndex, Scalar,
                      chevalley_generators, combination, degree, enumerate_basis, shift)
from .report import worse

# |a - m| below this, for an integer m >= 0, is treated as hitting the pole set.
GUARD = 1e-12


class Kind(str, Enum):
    BASE_P = "base"
    BBL_X = "bbl"
    DEFORMED_E = "deformed"
    FINITE = "finite"

    @classmethod
    def parse(cls, text: str) -> "Kind":
        key = text.strip().lower()
        for kind in cls:
            if key in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"unknown realization kind {text!r}")


@dataclass(frozen=True)
class ModuleParams:
    n: int
    a: Scalar | None
    N: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("rank n must be >= 1")
        if self.N < 0:
            raise ValueError("cutoff N must be >= 0")


@dataclass(frozen=True)
class DeformCoeffs:
    m_minus: object
    m_plus: object


def is_nonneg_integer(a: Scalar) -> bool:
    return a.is_real and a.is_integer() and a.re >= 0


def guard_parameter(a: Scalar) -> None:
    """Reject a on (or within GUARD of) Z_{>=0}, where mu is undefined."""
    if is_nonneg_integer(a):
        raise ValueError(f"a = {a} is a nonnegative integer; only the FINITE realization exists there")
    z = a.to_complex()
    m = round(z.real)
    if m >= 0 and abs(z - m) < GUARD:
        raise ValueError(f"a = {a} is within {GUARD:g} of the integer {m}")


# ---------------------------------------------------------------------------
# mu and the deformation coefficients

def _abs_shift(a: Scalar, l: int, exact: bool):
    """|l - a|, exactly when a is an exact real number."""
    if exact:
        if not (a.exact and a.is_real):
            raise ValueError("exact |l - a| needs an exact real a")
        return abs(sympy.Rational(l) - sympy.Rational(a.re.numerator, a.re.denominator))
    return abs(complex(l) - a.to_complex())


def mu_ratio_up(n: int, a: Scalar, l: int, exact: bool = False):
    """mu(l + 1) / mu(l) = sqrt((l + n) / |l - a|)."""
    if exact:
        return sympy.sqrt(sympy.Rational(l + n) / _abs_shift(a, l, True))
    return math.sqrt((l + n) / _abs_shift(a, l, False))


def mu_ratio_down(n: int, a: Scalar, l: int, exact: bool = False):
    """mu(l - 1) / mu(l) = sqrt(|l - 1 - a| / (l - 1 + n)), for l >= 1."""
    if l < 1:
        raise ValueError("mu(l - 1) needs l >= 1")
    if exact:
        return sympy.sqrt(_abs_shift(a, l - 1, True) / sympy.Rational(l - 1 + n))
    return math.sqrt(_abs_shift(a, l - 1, False) / (l - 1 + n))


def log_mu(n: int, a: Scalar, l: int) -> float:
    z = a.to_complex()
    return 0.5 * math.fsum(math.log(j + n - 1) - math.log(abs(j - z - 1)) for j in range(1, l + 1))


def mu(n: int, a, l: int, exact: bool = False):
    """mu_a(l) = sqrt(prod_{j=1}^{l} (j + n - 1) / |j - a - 1|).

    Returns a positive float, or an exact sympy number when ``exact`` and a is
    an exact real.  mu(n, a, 0) = 1 and mu(n, -n, l) = 1.
    """
    a = Scalar.of(a)
    guard_parameter(a)
    if l < 0:
        raise ValueError("l must be >= 0")
    if exact:
        prod = sympy.Integer(1)
        for j in range(1, l + 1):
            prod *= sympy.Rational(j + n - 1) / _abs_shift(a, j - 1, True)
        return sympy.sqrt(prod)
    return math.exp(log_mu(n, a, l))


def deform_coeffs(n: int, a, k: MultiIndex, exact: bool = False) -> DeformCoeffs:
    """m^-_k = k_1 (mu(|k|-1)/mu(|k|) - 1) and m^+_k = (a-|k|) mu(|k|+1)/mu(|k|) + n + |k|."""
    a = Scalar.of(a)
    guard_parameter(a)
    l = degree(k)
    if exact:
        av = a.as_sympy()
        m_minus = sympy.Integer(0) if k[0] == 0 else k[0] * (mu_ratio_down(n, a, l, True) - 1)
        m_plus = (av - l) * mu_ratio_up(n, a, l, True) + n + l
        return DeformCoeffs(m_minus, m_plus)
    z = a.to_complex()
    m_minus = 0.0 if k[0] == 0 else k[0] * (mu_ratio_down(n, a, l) - 1.0)
    m_plus = (z - l) * mu_ratio_up(n, a, l) + n + l
    return DeformCoeffs(m_minus, m_plus)


# ---------------------------------------------------------------------------
# truncated modules

class TruncatedModule:
    """A realization restricted to the window |k| <= N.

    Action tables are built lazily per generator; ``terms`` may also be asked
    about labels just outside the window (their targets are simply not in
    ``index``).
    """

    def __init__(self, kind: Kind, params: ModuleParams, field: Field):
        self.kind = kind
        self.params = params
        self.field = field
        self.n = params.n
        self.N = params.N
        self.a = params.a
        self.closed = kind is Kind.FINITE
        self.basis = enumerate_basis(self.n, self.N)
        self.index = {k: i for i, k in enumerate(self.basis)}
        self._a_val = field.convert(self.a) if self.a is not None else None
        self._ratio_cache: dict = {}
        self._tables: dict = {}
        self._matrices: dict = {}
        self._lock = threading.Lock()
        self._log_level = self._level_log_norms(self.N + 4)

    # -- norms ---------------------------------------------------------------
    def _level_log_norms(self, top: int) -> np.ndarray:
        """log of prod_{j=1}^{l} d_j for l = 0..top (the |k|-dependent denominator)."""
        j = np.arange(1, top + 1, dtype=float)
        if self.kind in (Kind.BASE_P, Kind.DEFORMED_E):
            d = np.log(j + self.n - 1)
        else:
            # FINITE hits |j - a - 1| = 0 past the rim; those levels are never stored
            with np.errstate(divide="ignore"):
                d = np.log(np.abs(j - self.a.to_complex() - 1))
        return np.concatenate([[0.0], np.cumsum(d)])

    def log_norm_sq(self, k: MultiIndex) -> float:
        l = degree(k)
        if l >= len(self._log_level):
            self._log_level = self._level_log_norms(2 * l + 4)
        return sum(math.lgamma(x + 1) for x in k) - float(self._log_level[l])

    def norm_sq(self, k: MultiIndex) -> float:
        return math.exp(self.log_norm_sq(k))

    def norm_sq_array(self) -> np.ndarray:
        return np.array([self.norm_sq(k) for k in self.basis])

    # -- coefficients ----------------------------------------------------------
    def _ratio(self, which: str, l: int):
        key = (which, l)
        val = self._ratio_cache.get(key)
        if val is None:
            exact = self.field is SURD
            fn = mu_ratio_up if which == "up" else mu_ratio_down
            val = fn(self.n, self.a, l, exact)
            self._ratio_cache[key] = val
        return val

    def deform(self, k: MultiIndex) -> DeformCoeffs:
        """m^-_k, m^+_k in this module's scalar field."""
        l = degree(k)
        av = self._a_val
        m_minus = self.field.convert(0) if k[0] == 0 else k[0] * (self._ratio("down", l) - 1)
        m_plus = (av - l) * self._ratio("up", l) + self.n + l
        return DeformCoeffs(m_minus, m_plus)

    def _elementary(self, g: GeneratorId, k: MultiIndex) -> list:
        kind, j, n = g.kind, g.index, self.n
        fld = self.field
        l = degree(k)
        if kind == "H":
            if j == 0:
                if self.kind is Kind.BASE_P:
                    c = fld.convert(-n - l - k[0])
                elif self.kind is Kind.DEFORMED_E:
                    c = fld.convert(-n - l - k[0]) + (n + self._a_val)
                else:
                    c = self._a_val - k[0] - l
            else:
                c = fld.convert(k[j - 1] - k[j])
            return [] if fld.is_zero(c) else [(k, c)]
        if kind == "E":
            if j == 0:
                if k[0] == 0:
                    return []
                c = fld.convert(k[0])
                if self.kind is Kind.DEFORMED_E:
                    c = c + self.deform(k).m_minus
                return [(shift(k, minus=1), c)]
            if k[j] == 0:
                return []
            return [(shift(k, plus=j, minus=j + 1), fld.convert(k[j]))]
        # F
        if j == 0:
            if self.kind is Kind.BASE_P:
                c = fld.convert(-n - l)
            elif self.kind is Kind.DEFORMED_E:
                c = fld.convert(-n - l) + self.deform(k).m_plus
            else:
                c = self._a_val - l
            return [] if fld.is_zero(c) else [(shift(k, plus=1), c)]
        if k[j - 1] == 0:
            return []
        return [(shift(k, plus=j + 1, minus=j), fld.convert(k[j - 1]))]

    def _compute_terms(self, g: GeneratorId, k: MultiIndex) -> tuple:
        if g.kind in ("H", "E", "F"):
            return tuple(self._elementary(g, k))
        acc: dict = {}
        for c, h in combination(g):
            c = self.field.convert(c)
            for k2, v in self._elementary(h, k):
                acc[k2] = acc[k2] + c * v if k2 in acc else c * v
        return tuple((k2, v) for k2, v in acc.items() if not self.field.is_zero(v))

    def terms(self, g: GeneratorId, k: MultiIndex) -> tuple:
        """The image of basis label k under g, as (label, coefficient) pairs."""
        if k in self.index:
            return self.table(g)[k]
        return self._compute_terms(g, k)

    def table(self, g: GeneratorId) -> dict:
        tab = self._tables.get(g)
        if tab is None:
            g.check_rank(self.n)
            with self._lock:
                tab = self._tables.get(g)
                if tab is None:
                    tab = {k: self._compute_terms(g, k) for k in self.basis}
                    self._tables[g] = tab
        return tab

    def coo(self, g: GeneratorId):
        """(row, col, re, im) arrays of the window-restricted action of g."""
        rows, cols, re, im = [], [], [], []
        for k, terms in self.table(g).items():
            for k2, c in terms:
                if k2 in self.index:
                    z = self.field.to_complex(c)
                    rows.append(self.index[k2])
                    cols.append(self.index[k])
                    re.append(z.real)
                    im.append(z.imag)
        return (np.array(rows, dtype=int), np.array(cols, dtype=int),
                np.array(re, dtype=float), np.array(im, dtype=float))

    def matrix(self, g: GeneratorId) -> sp.csr_matrix:
        """Float sparse matrix of g on the window (columns are sources)."""
        m = self._matrices.get(g)
        if m is None:
            r, c, re, im = self.coo(g)
            dim = len(self.basis)
            m = sp.csr_matrix((re + 1j * im, (r, c)), shape=(dim, dim))
            self._matrices[g] = m
        return m

    def weight(self, k: MultiIndex) -> tuple:
        out = []
        for j in range(self.n):
            terms = self.terms(GeneratorId("H", j), k)
            out.append(terms[0][1] if terms else self.field.convert(0))
        return tuple(out)

    def summary(self) -> dict:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "a": None if self.a is None else str(self.a),
            "N": self.N,
            "dimension": len(self.basis),
            "field": self.field.name,
        }

    def export_coo(self, fh, g: GeneratorId) -> None:
        r, c, re, im = self.coo(g)
        fh.write("row,col,re,im\n")
        for row in zip(r, c, re, im):
            fh.write(f"{row[0]},{row[1]},{row[2]!r},{row[3]!r}\n")

    def __repr__(self) -> str:
        return f"TruncatedModule({json.dumps(self.summary())})"


def _choose_field(kind: Kind, a: Scalar | None, exact: bool | None) -> Field:
    if exact is False or (a is not None and not a.exact):
        return FLOAT
    if kind is Kind.DEFORMED_E:
        if a.is_real:
            return SURD
        if exact:
            raise ValueError("the deformed action at non-real a involves |j - a - 1|; no exact path")
        return FLOAT
    return GAUSSIAN


def build_realization(kind, params: ModuleParams, exact: bool | None = None) -> TruncatedModule:
    """Construct a truncated realization.

    ``exact=None`` picks exact arithmetic whenever the parameter allows it:
    Gaussian rationals for BASE_P/BBL_X/FINITE, sympy surds for DEFORMED_E
    at real rational a, floats otherwise.
    """
    kind = Kind.parse(kind) if isinstance(kind, str) else kind
    n, a, N = params.n, params.a, params.N
    if kind is Kind.BASE_P:
        base = Scalar.of(-n, exact=True if a is None else a.exact)
        if a is not None and a.to_complex() != complex(-n):
            raise ValueError("BASE_P is the a = -n point; no other a is allowed")
        params = ModuleParams(n, base, N)
        a = base
    elif a is None:
        raise ValueError(f"{kind.name} needs a parameter a")
    if kind is Kind.FINITE:
        if not (a.is_real and a.is_integer(tol=GUARD) and a.re >= 0):
            raise ValueError("FINITE needs a in Z_{>=0}")
        m = int(round(float(a.re)))
        if N != m:
            raise ValueError(f"FINITE needs N = a = {m}, got N = {N}")
    elif kind in (Kind.BBL_X, Kind.DEFORMED_E):
        guard_parameter(a)
    return TruncatedModule(kind, params, _choose_field(kind, a, exact))


def finite(n: int, m: int, exact: bool | None = None) -> TruncatedModule:
    return build_realization(Kind.FINITE, ModuleParams(n, Scalar.of(m), m), exact)


def change_of_basis_defect(params: ModuleParams, exact: bool | None = None) -> float:
    """Max relative gap between the mu-conjugated DEFORMED_E action and BBL_X.

    With x(k) = mu(|k|) e(k), a deformed coefficient c for e(k) -> e(k')
    becomes c * mu(|k|) / mu(|k'|) for x(k) -> x(k'); that must equal the
    BBL_X coefficient.  Checked for all H_j, E_j, F_j on |k| <= N - 1.
    """
    guard_parameter(params.a)
    dm = build_realization(Kind.DEFORMED_E, params, exact)
    bm = build_realization(Kind.BBL_X, params, False if not dm.field.exact else exact)
    surd = dm.field is SURD
    worst = 0.0
    for g in chevalley_generators(params.n):
        for k in dm.basis:
            l = degree(k)
            if l > params.N - 1:
                continue
            ref = {k2: c for k2, c in bm.terms(g, k)}
            got = {}
            for k2, c in dm.terms(g, k):
                l2 = degree(k2)
                if l2 == l + 1:
                    c = c / dm._ratio("up", l)
                elif l2 == l - 1:
                    c = c / dm._ratio("down", l)
                got[k2] = c
            for k2 in set(ref) | set(got):
                r = ref.get(k2, 0)
                c = got.get(k2, 0)
                if surd:
                    r_s = GAUSSIAN_to_sympy(r)
                    diff = sympy.nsimplify(c - r_s) if c - r_s != 0 else 0
                    if diff == 0:
                        continue
                    d, scale = abs(complex(diff)), abs(complex(r_s))
                else:
                    r_c = bm.field.to_complex(r) if k2 in ref else 0j
                    c_c = dm.field.to_complex(c) if k2 in got else 0j
                    d, scale = abs(c_c - r_c), abs(r_c)
                worst = worse(worst, d / scale if scale > 0 else d)
    return worst


def GAUSSIAN_to_sympy(x):
    if isinstance(x, int):
        return sympy.Integer(x)
    return sympy.Rational(int(x.x.numerator), int(x.x.denominator)) + sympy.I * sympy.Rational(
        int(x.y.numerator), int(x.y.denominator))
