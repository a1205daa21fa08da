"""Core bookkeeping: multi-indices, scalar fields, sparse vectors, generators.

Basis labels are plain tuples of nonnegative ints ``k = (k_1, ..., k_n)``.
Generators are labelled 0-based, ``H_0 .. H_{n-1}`` etc., while the entries
of a multi-index keep the 1-based names ``k_1 .. k_n`` (so ``k[0]`` is
``k_1``).  The unit index ``eps(n, j)`` is 1-based to match.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Mapping

import numpy as np
import sympy
from sympy.polys.domains import QQ, QQ_I

from .report import worse

MultiIndex = tuple  # tuple[int, ...]


def degree(k: MultiIndex) -> int:
    return sum(k)


def eps(n: int, j: int) -> MultiIndex:
    """The j-th unit index (1-based) in Z_{>=0}^n."""
    if not 1 <= j <= n:
        raise ValueError(f"unit index {j} out of range for n={n}")
    return tuple(1 if i == j - 1 else 0 for i in range(n))


def shift(k: MultiIndex, plus: int | None = None, minus: int | None = None) -> MultiIndex:
    """``k + eps_plus - eps_minus`` (1-based positions, either may be None)."""
    out = list(k)
    if plus is not None:
        out[plus - 1] += 1
    if minus is not None:
        out[minus - 1] -= 1
    return tuple(out)


def _compositions(d: int, n: int) -> Iterator[MultiIndex]:
    # descending lexicographic: (d,0,..), (d-1,1,..), ...
    if n == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _compositions(d - first, n - 1):
            yield (first,) + rest


def level(n: int, d: int) -> list[MultiIndex]:
    """All k with |k| = d, in the same order used by ``enumerate_basis``."""
    return list(_compositions(d, n))


def enumerate_basis(n: int, N: int) -> list[MultiIndex]:
    """All k in Z_{>=0}^n with |k| <= N, graded then descending-lex ordered."""
    if n < 1 or N < 0:
        raise ValueError("need n >= 1 and N >= 0")
    out: list[MultiIndex] = []
    for d in range(N + 1):
        out.extend(_compositions(d, n))
    return out


def graded_key(k: MultiIndex) -> tuple:
    """Sort key reproducing the basis order."""
    return (degree(k), tuple(-x for x in k))


# ---------------------------------------------------------------------------
# scalars

def _frac(text: str) -> Fraction:
    if text in ("", "+"):
        return Fraction(1)
    if text == "-":
        return Fraction(-1)
    return Fraction(text)


@dataclass(frozen=True)
class Scalar:
    """A complex parameter, carried exactly (Gaussian rational) or as floats.

    ``re``/``im`` are ``Fraction`` in exact mode and ``float`` otherwise.
    """

    re: Fraction | float
    im: Fraction | float = 0
    exact: bool = True

    @classmethod
    def parse(cls, text: str, exact: bool = True) -> "Scalar":
        """Parse ``-1.5``, ``1/3``, ``2i``, ``-1+0.5i``, ``i``.

        Decimal literals are rational, so they parse exactly unless
        ``exact=False``.
        """
        body = text.strip().replace(" ", "")
        try:
            if body.endswith("i"):
                body = body[:-1]
                cut = max((p for p, ch in enumerate(body)
                           if ch in "+-" and p > 0 and body[p - 1] not in "eE"), default=None)
                if cut is None:
                    re_val, im_val = Fraction(0), _frac(body)
                else:
                    re_val, im_val = Fraction(body[:cut]), _frac(body[cut:])
            else:
                re_val, im_val = Fraction(body), Fraction(0)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"cannot parse scalar {text!r}") from None
        s = cls(re_val, im_val, True)
        return s if exact else s.to_float()

    @classmethod
    def of(cls, value, exact: bool | None = None) -> "Scalar":
        """Coerce int/Fraction/float/complex/str/Scalar."""
        if isinstance(value, Scalar):
            s = value
        elif isinstance(value, str):
            s = cls.parse(value)
        elif isinstance(value, (int, Fraction)):
            s = cls(Fraction(value), Fraction(0), True)
        elif isinstance(value, float):
            s = cls(float(value), 0.0, False)
        elif isinstance(value, complex):
            s = cls(value.real, value.imag, False)
        else:
            raise TypeError(f"cannot make a Scalar from {type(value).__name__}")
        if exact is None or exact == s.exact:
            return s
        if exact:
            return cls(Fraction(s.re), Fraction(s.im), True)
        return s.to_float()

    def to_float(self) -> "Scalar":
        return Scalar(float(self.re), float(self.im), False)

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def is_integer(self, tol: float = 0.0) -> bool:
        if not self.is_real:
            return False
        if self.exact:
            return Fraction(self.re).denominator == 1
        return abs(self.re - round(self.re)) <= tol

    def as_gaussian(self):
        if not self.exact:
            raise ValueError("float scalar has no exact form")
        return QQ_I(QQ(self.re.numerator, self.re.denominator),
                    QQ(self.im.numerator, self.im.denominator))

    def as_sympy(self):
        if self.exact:
            return sympy.Rational(self.re.numerator, self.re.denominator) + sympy.I * sympy.Rational(
                self.im.numerator, self.im.denominator)
        return sympy.Float(self.re) + sympy.I * sympy.Float(self.im)

    def __str__(self) -> str:
        def fmt(x):
            if isinstance(x, Fraction):
                return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
            return repr(float(x))
        if self.im == 0:
            return fmt(self.re)
        if self.re == 0:
            return f"{fmt(self.im)}i"
        sign = "+" if self.im > 0 else "-"
        return f"{fmt(self.re)}{sign}{fmt(abs(self.im))}i"


class Field:
    """Coefficient arithmetic for one scalar mode."""

    name = "abstract"
    exact = False

    def convert(self, x):
        raise NotImplementedError

    def is_zero(self, x) -> bool:
        raise NotImplementedError

    def to_complex(self, x) -> complex:
        raise NotImplementedError


class FloatField(Field):
    name = "float"
    exact = False

    def convert(self, x):
        if isinstance(x, Scalar):
            return x.to_complex()
        if isinstance(x, tuple):
            return complex(float(x[0]), float(x[1]))
        return complex(x)

    def is_zero(self, x) -> bool:
        return x == 0

    def to_complex(self, x) -> complex:
        return complex(x)


class GaussianField(Field):
    """Exact Gaussian rationals (sympy's QQ_I domain)."""

    name = "gaussian"
    exact = True

    def convert(self, x):
        if isinstance(x, Scalar):
            return x.as_gaussian()
        if isinstance(x, tuple):
            return QQ_I(QQ(Fraction(x[0]).numerator, Fraction(x[0]).denominator),
                        QQ(Fraction(x[1]).numerator, Fraction(x[1]).denominator))
        if isinstance(x, Fraction):
            return QQ_I(QQ(x.numerator, x.denominator), 0)
        if isinstance(x, int):
            return QQ_I(x, 0)
        if isinstance(x, type(QQ_I.zero)):
            return x
        raise TypeError(f"not exactly representable: {x!r}")

    def is_zero(self, x) -> bool:
        return not x

    def to_complex(self, x) -> complex:
        return complex(float(x.x), float(x.y))


class SurdField(Field):
    """Exact sympy numbers; used where square roots of rationals appear."""

    name = "surd"
    exact = True

    def convert(self, x):
        if isinstance(x, Scalar):
            return x.as_sympy()
        if isinstance(x, tuple):
            return sympy.Rational(Fraction(x[0]).numerator, Fraction(x[0]).denominator) + sympy.I * sympy.Rational(
                Fraction(x[1]).numerator, Fraction(x[1]).denominator)
        if isinstance(x, Fraction):
            return sympy.Rational(x.numerator, x.denominator)
        return sympy.sympify(x)

    def is_zero(self, x) -> bool:
        if x == 0:
            return True
        if abs(complex(x)) > 1e-30:
            return False
        return sympy.simplify(x) == 0

    def to_complex(self, x) -> complex:
        return complex(x)


FLOAT = FloatField()
GAUSSIAN = GaussianField()
SURD = SurdField()


# ---------------------------------------------------------------------------
# sparse vectors

@dataclass(frozen=True)
class SparseVector:
    """Finite combination of basis labels.

    ``boundary_mass`` accumulates the magnitude of every coefficient that was
    pushed outside the truncation window; zero means the vector is exact.
    """

    coeffs: Mapping[MultiIndex, object]
    field: Field = FLOAT
    boundary_mass: float = 0.0

    @classmethod
    def basis(cls, k: MultiIndex, field: Field = FLOAT) -> "SparseVector":
        return cls({tuple(k): field.convert(1)}, field)

    @classmethod
    def build(cls, items: Iterable[tuple[MultiIndex, object]], field: Field = FLOAT,
              boundary_mass: float = 0.0) -> "SparseVector":
        acc: dict = {}
        for k, c in items:
            c = field.convert(c)
            acc[k] = acc[k] + c if k in acc else c
        return cls({k: c for k, c in acc.items() if not field.is_zero(c)}, field, boundary_mass)

    @property
    def exact(self) -> bool:
        return self.field.exact

    def items(self):
        return self.coeffs.items()

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs.get(tuple(k), self.field.convert(0))

    def is_zero(self) -> bool:
        return not self.coeffs

    def scale(self, c) -> "SparseVector":
        c = self.field.convert(c)
        return SparseVector.build(((k, c * v) for k, v in self.coeffs.items()), self.field,
                                  self.boundary_mass * abs(self.field.to_complex(c)))

    def __add__(self, other: "SparseVector") -> "SparseVector":
        _check_same_field(self, other)
        acc = dict(self.coeffs)
        for k, v in other.coeffs.items():
            acc[k] = acc[k] + v if k in acc else v
        return SparseVector({k: v for k, v in acc.items() if not self.field.is_zero(v)}, self.field,
                            self.boundary_mass + other.boundary_mass)

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        return self + other.scale(-1)

    def to_complex(self) -> dict:
        return {k: self.field.to_complex(v) for k, v in self.coeffs.items()}

    def max_degree(self) -> int:
        return max((degree(k) for k in self.coeffs), default=0)


def _check_same_field(u: SparseVector, v: SparseVector) -> None:
    if u.field.exact != v.field.exact:
        raise ValueError(f"scalar mode mismatch: {u.field.name} vs {v.field.name}")


# ---------------------------------------------------------------------------
# generators

_KINDS = ("H", "E", "F", "X", "Y", "iH")


@dataclass(frozen=True, order=True)
class GeneratorId:
    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.index < 0:
            raise ValueError("generator index must be >= 0")

    @classmethod
    def parse(cls, text: str) -> "GeneratorId":
        m = re.fullmatch(r"(iH|H|E|F|X|Y)_?(\d+)", text.strip())
        if not m:
            raise ValueError(f"cannot parse generator {text!r}")
        return cls(m.group(1), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.kind}{self.index}"

    def check_rank(self, n: int) -> None:
        if self.index > n - 1:
            raise ValueError(f"generator {self} out of range for rank {n}")


def H(j: int) -> GeneratorId:
    return GeneratorId("H", j)


def E(j: int) -> GeneratorId:
    return GeneratorId("E", j)


def F(j: int) -> GeneratorId:
    return GeneratorId("F", j)


def X(j: int) -> GeneratorId:
    return GeneratorId("X", j)


def Y(j: int) -> GeneratorId:
    return GeneratorId("Y", j)


def iH(j: int) -> GeneratorId:
    return GeneratorId("iH", j)


def chevalley_generators(n: int) -> list[GeneratorId]:
    return [g(j) for g in (H, E, F) for j in range(n)]


def real_form_generators(n: int) -> list[GeneratorId]:
    return [g(j) for g in (iH, X, Y) for j in range(n)]


# Gaussian-integer/rational coefficients as (re, im) pairs, field-agnostic.
_HALF = Fraction(1, 2)


def combination(g: GeneratorId) -> tuple[tuple[tuple, GeneratorId], ...]:
    """Express g through H, E, F.

    X_0 = E_0 + F_0, Y_0 = i(F_0 - E_0); for j >= 1, X_j = F_j - E_j and
    Y_j = i(E_j + F_j); these invert E_0 = (X_0 + iY_0)/2,
    F_0 = (X_0 - iY_0)/2, E_j = -(X_j + iY_j)/2, F_j = (X_j - iY_j)/2.
    """
    j = g.index
    if g.kind in ("H", "E", "F"):
        return (((1, 0), g),)
    if g.kind == "iH":
        return (((0, 1), H(j)),)
    if g.kind == "X":
        if j == 0:
            return (((1, 0), E(0)), ((1, 0), F(0)))
        return (((-1, 0), E(j)), ((1, 0), F(j)))
    # Y
    if j == 0:
        return (((0, -1), E(0)), ((0, 1), F(0)))
    return (((0, 1), E(j)), ((0, 1), F(j)))


def chevalley_from_real(g: GeneratorId) -> tuple[tuple[tuple, GeneratorId], ...]:
    """Express H_j, E_j, F_j through iH_j, X_j, Y_j (inverse of ``combination``)."""
    j = g.index
    if g.kind == "H":
        return (((0, -1), iH(j)),)
    sign = 1 if j == 0 else -1
    if g.kind == "E":
        return (((sign * _HALF, 0), X(j)), ((0, sign * _HALF), Y(j)))
    if g.kind == "F":
        return (((_HALF, 0), X(j)), ((0, -_HALF), Y(j)))
    return (((1, 0), g),)


# ---------------------------------------------------------------------------
# Cartan data and the Chevalley-Serre presentation

@dataclass(frozen=True)
class CartanData:
    series: str
    rank: int

    def __post_init__(self):
        if self.series not in ("A", "C"):
            raise ValueError("only series A and C are supported")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")

    @property
    def matrix(self) -> np.ndarray:
        r = self.rank
        A = 2 * np.eye(r, dtype=int)
        for i in range(r - 1):
            A[i, i + 1] = A[i + 1, i] = -1
        if self.series == "C" and r >= 2:
            # long root last; entry (i, j) = <coroot_i, root_j>
            A[r - 2, r - 1] = -2
        return A

    def entry(self, i: int, j: int) -> int:
        return int(self.matrix[i, j])

    def central_element(self, omit: int) -> list[int]:
        """Primitive integer c with sum_i c_i H_i central in the Levi omitting node ``omit``."""
        # [sum c_i H_i, E_j] = (sum_i c_i A_ij) E_j, so c solves c^T A = e_omit
        col = sympy.Matrix(self.matrix.tolist()).T.inv()[:, omit]
        den = math.lcm(*[int(sympy.Rational(x).q) for x in col])
        ints = [int(x * den) for x in col]
        g = 0
        for c in ints:
            g = math.gcd(g, c)
        return [c // g for c in ints]

    def expected_bracket(self, g1: GeneratorId, g2: GeneratorId) -> dict[GeneratorId, int]:
        """[g1, g2] for g1, g2 among H_i, E_i, F_i, as a dict generator -> int."""
        for g in (g1, g2):
            if g.kind not in ("H", "E", "F"):
                raise ValueError("expected_bracket takes Chevalley generators; expand first")
        i, j = g1.index, g2.index
        k1, k2 = g1.kind, g2.kind
        if k1 == "H" and k2 == "H":
            return {}
        if k1 == "H":
            c = self.entry(i, j)
            return {g2: c if k2 == "E" else -c} if c else {}
        if k2 == "H":
            return {g: -v for g, v in self.expected_bracket(g2, g1).items()}
        if k1 == k2:
            # [E_i, E_j] with |i-j| == 1 is a new root vector, not a generator
            if self.entry(i, j) == 0 or i == j:
                return {}
            raise ValueError(f"[{g1},{g2}] is not in the span of the generators")
        if k1 == "E":
            return {H(i): 1} if i == j else {}
        return {H(i): -1} if i == j else {}

    def bracket_expandable(self, g1: GeneratorId, g2: GeneratorId) -> bool:
        if g1.kind == g2.kind and g1.kind in ("E", "F") and g1.index != g2.index:
            return self.entry(g1.index, g2.index) == 0
        return True


# Lie expressions: a GeneratorId or ("[", x, y).

def bracket(x, y):
    return ("[", x, y)


def ad_power(x, y, m: int):
    for _ in range(m):
        y = bracket(x, y)
    return y


def lie_words(expr) -> dict[tuple[GeneratorId, ...], int]:
    """Expand a Lie expression into the associative words it represents."""
    if isinstance(expr, GeneratorId):
        return {(expr,): 1}
    _, x, y = expr
    wx, wy = lie_words(x), lie_words(y)
    out: dict = {}
    for a, ca in wx.items():
        for b, cb in wy.items():
            out[a + b] = out.get(a + b, 0) + ca * cb
            out[b + a] = out.get(b + a, 0) - ca * cb
    return {w: c for w, c in out.items() if c}


def serre_elements(cartan: CartanData) -> list[tuple[str, object]]:
    """(label, expression) pairs for (ad E_i)^{1-c_ij} E_j and the F analogue."""
    out = []
    r = cartan.rank
    for kind, gen in (("E", E), ("F", F)):
        for i in range(r):
            for j in range(r):
                if i == j:
                    continue
                m = 1 - cartan.entry(i, j)
                out.append((f"(ad {kind}{i})^{m} {kind}{j}", ad_power(gen(i), gen(j), m)))
    return out


# ---------------------------------------------------------------------------
# operator application on a truncated module

def apply(module, g: GeneratorId, v: SparseVector) -> SparseVector:
    """Act by generator g on v inside the module's window.

    Components leaving the window are dropped from the coefficients and their
    magnitude is added to ``boundary_mass``.
    """
    g.check_rank(module.n)
    if v.field.exact != module.field.exact:
        raise ValueError(f"scalar mode mismatch: vector {v.field.name}, module {module.field.name}")
    fld = module.field
    acc: dict = {}
    lost = v.boundary_mass
    index = module.index
    for k, c in v.coeffs.items():
        for k2, coef in module.terms(g, k):
            val = coef * c
            if k2 in index:
                acc[k2] = acc[k2] + val if k2 in acc else val
            else:
                lost += abs(fld.to_complex(val))
    return SparseVector({k: c for k, c in acc.items() if not fld.is_zero(c)}, fld, lost)


def apply_word(module, word: tuple[GeneratorId, ...], v: SparseVector) -> SparseVector:
    """Apply ``word[0] word[1] ... word[-1]`` to v (rightmost acts first)."""
    for g in reversed(word):
        v = apply(module, g, v)
    return v


def evaluate_words(module, words: Mapping[tuple, object], v: SparseVector) -> SparseVector:
    fld = module.field
    acc: dict = {}
    lost = 0.0
    for word, c in words.items():
        w = apply_word(module, word, v)
        lost += w.boundary_mass
        c = fld.convert(c)
        for k, val in w.coeffs.items():
            val = c * val
            acc[k] = acc[k] + val if k in acc else val
    return SparseVector({k: c for k, c in acc.items() if not fld.is_zero(c)}, fld, lost)


def expand_chevalley(words: Mapping[tuple, object]) -> dict[tuple, tuple]:
    """Rewrite words over any generator kinds into words over H, E, F.

    Coefficients come back as complex-rational (re, im) pairs of Fractions.
    """
    out: dict = {}
    for word, c in words.items():
        c = _pair(c)
        options = [combination(g) for g in word]
        for choice in product(*options):
            coef = c
            for (cc, _) in choice:
                coef = _pmul(coef, cc)
            w = tuple(g for _, g in choice)
            out[w] = _padd(out.get(w, (Fraction(0), Fraction(0))), coef)
    return {w: c for w, c in out.items() if c != (0, 0)}


def _pair(c):
    if isinstance(c, tuple):
        return (Fraction(c[0]), Fraction(c[1]))
    if isinstance(c, complex):
        return (Fraction(c.real), Fraction(c.imag))
    return (Fraction(c), Fraction(0))


def _pmul(a, b):
    a, b = _pair(a), _pair(b)
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _padd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def vector_norm(module, v: SparseVector) -> float:
    """Hilbert norm from the module's diagonal norm weights."""
    total = 0.0
    for k, c in v.coeffs.items():
        z = module.field.to_complex(c)
        total += (z.real * z.real + z.imag * z.imag) * module.norm_sq(k)
    return math.sqrt(total)


def interior(module, depth: int) -> list[MultiIndex]:
    if module.closed:
        return list(module.basis)
    if module.N < depth:
        raise ValueError(f"window too small: N={module.N} < depth {depth}")
    return [k for k in module.basis if degree(k) <= module.N - depth]


def element_defect(module, words: Mapping[tuple, object], depth: int) -> float:
    """max over interior basis vectors v of ||W v|| / ||v|| for a word combination W."""
    worst = 0.0
    fld = module.field
    for k in interior(module, depth):
        v = SparseVector.basis(k, fld)
        w = evaluate_words(module, words, v)
        if w.boundary_mass:
            raise RuntimeError(f"interior vector {k} left the window; increase depth")
        if w.is_zero():
            continue
        worst = worse(worst, vector_norm(module, w) / math.sqrt(module.norm_sq(k)))
    return worst


def commutator_defect(module, g1: GeneratorId, g2: GeneratorId, interior_depth: int = 2,
                      cartan: CartanData | None = None) -> float:
    """Largest relative deviation of [g1, g2] from its Chevalley bracket."""
    if interior_depth < 2:
        raise ValueError("interior_depth must be >= 2")
    cartan = cartan or CartanData("A", module.n)
    words: dict = {}
    for w, c in expand_chevalley(lie_words(bracket(g1, g2))).items():
        words[w] = c
    # expected value, by bilinearity over the Chevalley expansions
    for c1, h1 in combination(g1):
        for c2, h2 in combination(g2):
            if not cartan.bracket_expandable(h1, h2):
                continue
            for g, c in cartan.expected_bracket(h1, h2).items():
                coef = _pmul(_pmul(c1, c2), (-c, 0))
                words[(g,)] = _padd(words.get((g,), (Fraction(0), Fraction(0))), coef)
    # a non-expandable pair [E_i, E_{i+1}] can only appear if the caller asked for it
    for c1, h1 in combination(g1):
        for c2, h2 in combination(g2):
            if not cartan.bracket_expandable(h1, h2):
                raise ValueError(f"no expected bracket for [{h1},{h2}]")
    words = {w: c for w, c in words.items() if c != (0, 0)}
    return element_defect(module, words, interior_depth)
