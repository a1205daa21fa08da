"""Integrability and unitarity verdicts for degree-1 module labels.

Labels are ``N(a1,...,an)`` (sl(n+1)) or ``M(b1,...,bn)`` (sp(n)), or a
highest weight ``hw: c1*w1 + ... + cn*wn``; a trailing ``^*`` marks the
contragredient.  Entries are exact numbers or the symbols ``a`` (generic
complex), ``m`` (a nonnegative integer), ``-1-m`` and ``-1-a``.

Tuples are matched literally against the case lists of the classification
theorems; the highest weight dictionary is only used for finite
dimensionality and for ``hw:`` inputs.
"""
from __future__ import annotations

import re
from fractions import Fraction
from dataclasses import dataclass, field

import sympy
from sympy.core.logic import fuzzy_and, fuzzy_not

from .algebra import Scalar
from .report import dump_json
from .verify import FiniteTypeResult

A = sympy.Symbol("a")
M = sympy.Symbol("m", integer=True, nonnegative=True)
_SYMBOLS = {"a": A, "m": M, "-1-m": -1 - M, "-1-a": -1 - A}

ANCHOR_SU = "integrates into a continuous representation of G_{p,q} on a Hilbert space if and only if"
ANCHOR_SU_UNITARY = "unitary if and only if a in R_{<0}"
ANCHOR_SL = "if and only if V is finite dimensional"
ANCHOR_SPPQ = "cannot integrate into a continuous representation of G_{p,q}"
ANCHOR_SPN = "even or odd part of the metaplectic representation"
ANCHOR_FINITE = "restricting the index set of k"
ANCHOR_GLMOD = "is a (g,l_0)-module of finite type"


class NotDegreeOne(ValueError):
    """The label is not one of the degree-1 modules the tables cover."""


# ---------------------------------------------------------------------------
# predicates on exact / symbolic entries (True, False or None = undecided)

def in_z_nonneg(e):
    return fuzzy_and([e.is_integer, e.is_nonnegative])


def in_z_neg(e):
    return fuzzy_and([e.is_integer, e.is_negative])


def in_r_neg(e):
    return fuzzy_and([e.is_extended_real, e.is_negative])


def in_r_pos(e):
    return fuzzy_and([e.is_extended_real, e.is_positive])


def is_const(e, c) -> bool:
    return (sympy.sympify(e) - c).is_zero is True


def render(e) -> str:
    """Label-grammar text for an entry or coefficient."""
    e = sympy.sympify(e)
    if e.free_symbols:
        for text, sym in _SYMBOLS.items():
            if (e - sym).is_zero:
                return text
        return str(e).replace(" ", "")
    re_, im_ = e.as_real_imag()
    if re_.is_Rational and im_.is_Rational:
        return str(Scalar(Fraction(int(re_.p), int(re_.q)), Fraction(int(im_.p), int(im_.q)), True))
    return str(Scalar.of(complex(e)))


def _coef(c) -> str:
    text = render(c)
    return f"({text})" if any(ch in "+-" for ch in text[1:]) else text


# ---------------------------------------------------------------------------
# labels

def _entry(text: str, table: dict):
    t = text.strip().replace(" ", "")
    if t in table:
        return table[t]
    try:
        return Scalar.parse(t).as_sympy()
    except ValueError:
        raise NotDegreeOne(f"bad label entry {text!r}") from None


_HW_TERM = re.compile(r"([^*w]*)\*?w(\d+)")


def _parse_hw(body: str) -> dict[int, object]:
    s = body.replace(" ", "")
    coeffs: dict[int, object] = {}
    pos = 0
    for mt in _HW_TERM.finditer(s):
        if mt.start() != pos:
            raise NotDegreeOne(f"cannot parse highest weight {body!r}")
        pos = mt.end()
        c = mt.group(1)
        if c.startswith("+"):
            c = c[1:]
        if c.startswith("(") and c.endswith(")"):
            c = c[1:-1]
        if c in ("", "+"):
            val = sympy.Integer(1)
        elif c == "-":
            val = sympy.Integer(-1)
        else:
            val = _entry(c, _SYMBOLS)
        i = int(mt.group(2))
        coeffs[i] = coeffs.get(i, 0) + val
    if pos != len(s) or not coeffs:
        raise NotDegreeOne(f"cannot parse highest weight {body!r}")
    return coeffs


@dataclass(frozen=True)
class ModuleLabel:
    family: str
    params: tuple | None
    contragredient: bool = False
    hw: tuple | None = None  # explicit highest weight, when given in hw form

    @property
    def rank(self) -> int:
        return len(self.params) if self.params is not None else len(self.hw)

    @classmethod
    def parse(cls, text: str, rank: int | None = None) -> "ModuleLabel":
        s = text.strip()
        dual = s.endswith("^*")
        if dual:
            s = s[:-2].rstrip()
        if s.startswith("hw:"):
            coeffs = _parse_hw(s[3:])
            n = rank or max(coeffs)
            if max(coeffs) > n or min(coeffs) < 1:
                raise NotDegreeOne(f"fundamental weight index out of range 1..{n}")
            hw = tuple(sympy.sympify(coeffs.get(i, 0)) for i in range(1, n + 1))
            lab = hw_to_label(hw)
            return cls(lab.family, lab.params, dual, lab.hw)
        mt = re.fullmatch(r"([NM])\((.*)\)", s)
        if not mt:
            raise NotDegreeOne(f"cannot parse label {text!r}")
        params = tuple(_entry(x, _SYMBOLS) for x in mt.group(2).split(","))
        if rank is not None and len(params) != rank:
            raise NotDegreeOne(f"label has {len(params)} entries, the form needs {rank}")
        return cls(mt.group(1), params, dual)

    def contragredient_of(self) -> "ModuleLabel":
        return ModuleLabel(self.family, self.params, not self.contragredient, self.hw)

    def highest_weight(self) -> tuple | None:
        if self.hw is not None:
            return self.hw
        if self.family != "N":
            return None
        return tuple_to_hw(self.params)

    def __str__(self) -> str:
        if self.hw is not None:
            body = "hw: " + " + ".join(f"{_coef(c)}*w{i + 1}" for i, c in enumerate(self.hw))
        else:
            body = f"{self.family}(" + ",".join(render(x) for x in self.params) + ")"
        return body + ("^*" if self.contragredient else "")


def tuple_to_hw(params: tuple) -> tuple | None:
    """Highest weight (fundamental weight coordinates) of N(params), or None.

    Shapes, in order of precedence: (x,0,...,0) -> x w1;
    (-1^i, c, 0,...) for 1 <= i <= n-2 -> (-1-c) w_i + c w_{i+1};
    (-1^{n-1}, c) -> (-1-c) w_n.
    """
    n = len(params)
    z = sympy.Integer(0)
    if all(is_const(x, 0) for x in params[1:]):
        return (sympy.sympify(params[0]),) + (z,) * (n - 1)
    for i in range(1, n - 1):
        if all(is_const(x, -1) for x in params[:i]) and all(is_const(x, 0) for x in params[i + 1:]):
            c = params[i]
            hw = [z] * n
            hw[i - 1], hw[i] = -1 - c, c
            return tuple(hw)
    if n >= 2 and all(is_const(x, -1) for x in params[:-1]):
        return (z,) * (n - 1) + (-1 - params[-1],)
    return None


def _same(u: tuple, v: tuple) -> bool:
    return u is not None and v is not None and all(sympy.simplify(x - y) == 0 for x, y in zip(u, v))


def hw_to_label(hw: tuple) -> ModuleLabel:
    """N-form of a highest weight of one of the shapes a w1, a w_i - (1+a) w_{i+1}, a w_n.

    When the N-form does not read back to the same weight (the shape
    a w_{n-1} - (1+a) w_n, and a w_n at a = -1), the label keeps the explicit
    weight.
    """
    hw = tuple(sympy.sympify(c) for c in hw)
    n = len(hw)
    cands = [(hw[0],) + (0,) * (n - 1)]
    cands += [(-1,) * i + (-1 - hw[i - 1],) + (0,) * (n - i - 1) for i in range(1, n - 1)]
    if n >= 2:
        cands.append((-1,) * (n - 1) + (-1 - hw[-1],))
    for c in cands:
        c = tuple(sympy.sympify(x) for x in c)
        if _same(tuple_to_hw(c), hw):
            return ModuleLabel("N", c)
    nz = [i for i, c in enumerate(hw) if not is_const(c, 0)]
    if n >= 2 and set(nz) <= {n - 2, n - 1} and sympy.simplify(hw[-2] + hw[-1] + 1) == 0:
        tail = (-1,) * (n - 1) + (-1 - hw[-1],)
        return ModuleLabel("N", tuple(sympy.sympify(x) for x in tail), hw=hw)
    if n >= 2 and nz == [n - 1]:
        return ModuleLabel("N", tuple(sympy.sympify(x) for x in (-1,) * (n - 1) + (-1 - hw[-1],)), hw=hw)
    raise NotDegreeOne("highest weight is not of degree-1 shape")


def finite_dimensional_p(label: ModuleLabel) -> bool:
    """True iff the label's highest weight is dominant integral (symbolic a counts as generic)."""
    if label.family != "N":
        raise ValueError("finite_dimensional_p needs an N label")
    hw = label.highest_weight()
    if hw is None:
        return False
    return all(in_z_nonneg(sympy.sympify(c)) is True for c in hw)


def finite_dimension(label: ModuleLabel) -> int | None:
    """Weyl dimension formula for a finite-dimensional N label."""
    if not finite_dimensional_p(label):
        return None
    lam = [int(c) for c in label.highest_weight()]
    n = len(lam)
    num, den = 1, 1
    for i in range(n):
        for j in range(i, n):
            s = sum(lam[i:j + 1]) + (j - i + 1)
            num *= s
            den *= j - i + 1
    return num // den


# ---------------------------------------------------------------------------
# real forms and case tables

@dataclass(frozen=True)
class RealFormId:
    kind: str  # "su", "sl", "sp", "sppq"
    p: int = 0
    q: int = 0
    n: int = 0

    def __post_init__(self):
        if self.kind == "su":
            if self.p < 1 or self.q < 1:
                raise ValueError("SU(p,q) needs p, q >= 1")
        elif self.kind == "sl":
            if self.n < 3:
                raise ValueError("SL(n,R) needs n >= 3")
        elif self.kind == "sp":
            if self.n < 1:
                raise ValueError("Sp(n,R) needs n >= 1")
        elif self.kind == "sppq":
            if self.p < 1 or self.q < 1:
                raise ValueError("Sp(p,q) needs p, q >= 1")
        else:
            raise ValueError(f"unknown real form {self.kind!r}")

    @property
    def family(self) -> str:
        return "N" if self.kind in ("su", "sl") else "M"

    @property
    def rank(self) -> int:
        if self.kind == "su":
            return self.p + self.q - 1
        if self.kind == "sl":
            return self.n - 1
        if self.kind == "sp":
            return self.n
        return self.p + self.q

    def __str__(self) -> str:
        return {"su": f"SU({self.p},{self.q})", "sl": f"SL({self.n},R)",
                "sp": f"Sp({self.n},R)", "sppq": f"Sp({self.p},{self.q})"}[self.kind]


@dataclass(frozen=True)
class Pattern:
    name: str
    template: tuple  # -1 / 0 constants, or "x", "m", "-1-m" slots
    family_text: str
    integrable_if: str | None = None  # predicate on the free slot x
    unitary_if: str | None = None


_PRED = {
    "not Z>=0": lambda x: fuzzy_not(in_z_nonneg(x)),
    "not Z<0": lambda x: fuzzy_not(in_z_neg(x)),
    "R<0": in_r_neg,
    "R>0": in_r_pos,
}


def su_patterns(n: int, p: int) -> list[Pattern]:
    """The case list for SU(p, n+1-p), equivalently for the Levi l_{p-1}."""
    out = []
    if p == 1:
        out.append(Pattern("p=1 N(a,0,...,0)", ("x",) + (0,) * (n - 1),
                           "N(a,0,...,0), a not in Z>=0", "not Z>=0", "R<0"))
        if n >= 2:
            out.append(Pattern("p=1 N(-1,m,0,...,0)", (-1, "m") + (0,) * (n - 2),
                               "holomorphic discrete series"))
    elif p == n:
        out.append(Pattern("p=n N(-1,...,-1,a)", (-1,) * (n - 1) + ("x",),
                           "N(-1,...,-1,a), a not in Z<0", "not Z<0", "R>0"))
        out.append(Pattern("p=n N(-1,...,-1,-1-m,0)", (-1,) * (n - 2) + ("-1-m", 0),
                           "holomorphic discrete series"))
    else:
        note = "holomorphic discrete series (integrable and unitary lists coincide for 1<p<n)"
        out.append(Pattern("1<p<n N(-1^p,m,0,...)", (-1,) * p + ("m",) + (0,) * (n - p - 1), note))
        out.append(Pattern("1<p<n N(-1^(p-1),-1-m,0,...)", (-1,) * (p - 1) + ("-1-m",) + (0,) * (n - p),
                           note))
    return out


def match(pattern: Pattern, params: tuple):
    """Return the free slot value (or True if there is none) when params fit the template."""
    if len(params) != len(pattern.template):
        return None
    free = True
    for slot, e in zip(pattern.template, params):
        if slot == "x":
            free = e
        elif slot == "m":
            if in_z_nonneg(e) is not True:
                return None
        elif slot == "-1-m":
            if in_z_neg(e) is not True:
                return None
        elif not is_const(e, slot):
            return None
    return free


def _render_cond(pred: str, x) -> str:
    sets = {"not Z>=0": "not in Z>=0", "not Z<0": "not in Z<0", "R<0": "in R<0", "R>0": "in R>0"}
    return f"{render(x)} {sets[pred]}"


@dataclass
class ClassificationResult:
    form: str
    label: str
    integrable: bool
    unitary: bool | None
    matched_family: str
    justification: str
    finite_dimensional: bool = False
    conditions: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"form": self.form, "label": self.label, "integrable": self.integrable,
                "unitary": self.unitary, "matched_family": self.matched_family,
                "justification": self.justification, "finite_dimensional": self.finite_dimensional,
                "conditions": self.conditions}

    def to_json(self) -> str:
        return dump_json(self.to_dict())


def _evaluate(pattern: Pattern, x, conditions: list):
    """(integrable, unitary) for a matched pattern; None means undecided for symbolic input."""
    if pattern.integrable_if is None:
        return True, True
    integ = _PRED[pattern.integrable_if](x)
    if integ is None:  # generic symbol
        conditions.append(_render_cond(pattern.integrable_if, x))
        integ = True
    if not integ:
        return False, None
    unit = _PRED[pattern.unitary_if](x)
    if unit is None:
        conditions.append("unitary iff " + _render_cond(pattern.unitary_if, x))
    return True, unit


def classify(form: RealFormId, label: ModuleLabel | str) -> ClassificationResult:
    if isinstance(label, str):
        label = ModuleLabel.parse(label, form.rank)
    if label.family != form.family:
        raise NotDegreeOne(f"{label.family} labels do not belong to {form}")
    if label.rank != form.rank:
        raise NotDegreeOne(f"{form} needs rank {form.rank}, label has rank {label.rank}")
    text = str(label)
    dual = " (contragredient: same verdict)" if label.contragredient else ""

    if form.family == "M":
        return _classify_sp(form, label, text, dual)

    if finite_dimensional_p(label):
        trivial = all(is_const(c, 0) for c in label.highest_weight())
        return ClassificationResult(
            str(form), text, True, trivial, "finite-dimensional" + dual,
            f"{ANCHOR_FINITE}; a finite-dimensional unitary representation of a noncompact "
            "simple group is trivial", True)

    if form.kind == "sl":
        return ClassificationResult(str(form), text, False, None, "infinite-dimensional" + dual, ANCHOR_SL)

    conditions: list = []
    explicit_only = label.hw is not None and not _same(tuple_to_hw(label.params), label.hw)
    if not explicit_only:
        for pat in su_patterns(form.rank, form.p):
            x = match(pat, label.params)
            if x is None:
                continue
            integ, unit = _evaluate(pat, x, conditions)
            if not integ:
                continue
            just = ANCHOR_SU
            if pat.unitary_if == "R<0":
                just += f"; {ANCHOR_SU_UNITARY}"
            return ClassificationResult(str(form), text, True, unit, pat.family_text + dual, just,
                                        False, conditions)
    return ClassificationResult(str(form), text, False, None, "no case of the classification" + dual,
                                ANCHOR_SU)


def _classify_sp(form: RealFormId, label: ModuleLabel, text: str, dual: str) -> ClassificationResult:
    if form.kind == "sppq":
        return ClassificationResult(str(form), text, False, None, "none" + dual, ANCHOR_SPPQ)
    if all(is_const(x, -1) for x in label.params):
        return ClassificationResult(str(form), text, True, True,
                                    "metaplectic representation, even part" + dual, ANCHOR_SPN)
    if all(is_const(x, -1) for x in label.params[:-1]) and is_const(label.params[-1], -2):
        return ClassificationResult(str(form), text, True, True,
                                    "metaplectic representation, odd part" + dual, ANCHOR_SPN)
    return ClassificationResult(str(form), text, False, None, "none" + dual, ANCHOR_SPN)


# ---------------------------------------------------------------------------
# label-level finite type

def label_finite_type(label: ModuleLabel | str, levi: int = 0) -> FiniteTypeResult:
    """(g, l_levi)-finite type for an N label.

    Finite-dimensional labels and the labels on the case list for l_levi are
    of finite type.  Otherwise the evidence is the highest weight's
    coefficients at the nodes of l_levi that fail to be nonnegative integers.
    """
    if isinstance(label, str):
        label = ModuleLabel.parse(label)
    if label.family != "N":
        raise ValueError("label-level finite type is implemented for N labels")
    n = label.rank
    if not 0 <= levi < n:
        raise ValueError(f"Levi index must be in 0..{n - 1}")
    if finite_dimensional_p(label):
        return FiniteTypeResult("FiniteType", [{"reason": "finite-dimensional"}], ANCHOR_GLMOD)
    if label.hw is None or _same(tuple_to_hw(label.params), label.hw):
        for pat in su_patterns(n, levi + 1):
            x = match(pat, label.params)
            if x is not None and _evaluate(pat, x, [])[0]:
                return FiniteTypeResult("FiniteType", [{"reason": f"case list entry {pat.name}"}],
                                        ANCHOR_GLMOD)
    hw = label.highest_weight()
    evidence = []
    if hw is None:
        evidence.append({"reason": "not a highest weight label"})
    else:
        for i, c in enumerate(hw):
            if i == levi:
                continue
            verdict = in_z_nonneg(sympy.sympify(c))
            if verdict is not True:
                integral = sympy.sympify(c).is_integer
                evidence.append({"node": i, "eigenvalue": render(c),
                                 "reason": "non-integral" if integral is not True else "negative"})
        if not evidence:
            evidence.append({"reason": "not on the case list"})
    return FiniteTypeResult("NotFiniteType", evidence, ANCHOR_GLMOD)
