"""Structural checks on truncated realizations.

Everything here is window-relative: a statement about the infinite module is
checked on the labels |k| <= N, and anything that would need labels beyond
the window is reported instead of guessed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy

from .algebra import (CartanData, GeneratorId, MultiIndex, SparseVector, E, F, H, apply, bracket,
                      degree, expand_chevalley, lie_words, serre_elements, vector_norm)
from .modules import Kind, TruncatedModule
from .report import Report, worse

ANCHOR_RELATIONS = "generates a Lie algebra g isomorphic to sl(n+1,C)"
ANCHOR_DEGREE = "deg(V) = sup_lambda {dim(V_lambda)}"
ANCHOR_BRANCHING = "we have the following branching"
ANCHOR_CENTER = "(nH_0+(n-1)H_1+...+H_{n-1}) . x(k',0,...,0) = na-(n+1)k'"
ANCHOR_FINITE_TYPE = "is a (g,l_0)-module of finite type"
ANCHOR_GK = "The Gelfand-Kirillov dimension of V equals the rank of g"
ANCHOR_DICHOTOMY = "the action of X on V is either locally finite or injective"

INT_TOL = 1e-9


# ---------------------------------------------------------------------------
# relations

def relation_elements(cartan: CartanData):
    """(class, label, words) for the full Chevalley-Serre presentation.

    ``words`` maps associative words over H/E/F to (re, im) coefficients; the
    element they encode must act as zero.
    """
    r = cartan.rank
    out = []

    def add(cls, label, expr, expected):
        words = dict(expand_chevalley(lie_words(expr)))
        for g, c in expected.items():
            key = (g,)
            re, im = words.get(key, (Fraction(0), Fraction(0)))
            words[key] = (re - c, im)
        out.append((cls, label, {w: c for w, c in words.items() if c != (0, 0)}))

    for i in range(r):
        for j in range(i + 1, r):
            add("cartan", f"[H{i},H{j}]", bracket(H(i), H(j)), {})
    for i in range(r):
        for j in range(r):
            add("cartan-root", f"[H{i},E{j}]", bracket(H(i), E(j)), cartan.expected_bracket(H(i), E(j)))
            add("cartan-root", f"[H{i},F{j}]", bracket(H(i), F(j)), cartan.expected_bracket(H(i), F(j)))
    for i in range(r):
        for j in range(r):
            add("root-pair", f"[E{i},F{j}]", bracket(E(i), F(j)), cartan.expected_bracket(E(i), F(j)))
    for label, expr in serre_elements(cartan):
        add("serre", label, expr, {})
    return out


class _WordCache:
    """Memoized word application on one basis vector (suffixes are shared)."""

    def __init__(self, module: TruncatedModule, v: SparseVector):
        self.module = module
        self.memo = {(): v}

    def __call__(self, word: tuple) -> SparseVector:
        got = self.memo.get(word)
        if got is None:
            got = apply(self.module, word[0], self(word[1:]))
            self.memo[word] = got
        return got


def _combine(module, cache, words) -> SparseVector:
    fld = module.field
    acc: dict = {}
    lost = 0.0
    for word, c in words.items():
        w = cache(word)
        lost += w.boundary_mass
        c = fld.convert(c)
        for k, val in w.coeffs.items():
            val = c * val
            acc[k] = acc[k] + val if k in acc else val
    return SparseVector({k: c for k, c in acc.items() if not fld.is_zero(c)}, fld, lost)


def verify_relations(module: TruncatedModule, tol: float = 1e-9) -> Report:
    """Sweep every Chevalley-Serre relation over the window interior.

    A relation whose longest word has length L is tested on labels with
    |k| <= N - L so that no intermediate vector leaves the window.  In exact
    mode the pass criterion is an exactly zero defect.
    """
    if not module.closed and module.N < 4:
        raise ValueError("window too small: need N >= 4")
    cartan = CartanData("A", module.n)
    rels = relation_elements(cartan)
    worst: dict[str, float] = {}
    worst_at: dict[str, tuple] = {}
    for k in module.basis:
        v = SparseVector.basis(k, module.field)
        cache = _WordCache(module, v)
        for cls, label, words in rels:
            depth = max(len(w) for w in words) if words else 0
            if not module.closed and degree(k) > module.N - depth:
                continue
            res = _combine(module, cache, words)
            if res.boundary_mass:
                raise RuntimeError(f"{label} on {k} left the window")
            d = 0.0 if res.is_zero() else worse(0.0, vector_norm(module, res) / math.sqrt(module.norm_sq(k)))
            if d > worst.get(cls, -1.0):
                worst[cls] = d
                worst_at[cls] = (label, k)
    overall = max(worst.values(), default=0.0)
    ok = overall == 0.0 if module.field.exact else overall <= tol
    evidence = [{"class": c, "max_defect": worst[c], "relation": worst_at[c][0], "at": list(worst_at[c][1])}
                for c in sorted(worst)]
    return Report("relations", module.summary() | {"tol": tol}, "pass" if ok else "fail",
                  overall, evidence, ANCHOR_RELATIONS)


# ---------------------------------------------------------------------------
# weights

def weight_key(module: TruncatedModule, w: tuple) -> tuple:
    if module.field.exact:
        return tuple(w)
    out = []
    for x in w:
        z = complex(x)
        out.append((round(z.real / INT_TOL), round(z.imag / INT_TOL)))
    return tuple(out)


@dataclass
class WeightTable:
    spaces: dict  # key -> list of labels
    weights: dict  # key -> weight tuple (field values)
    degree: int

    def multiplicities(self) -> list[int]:
        return [len(v) for v in self.spaces.values()]


def weight_decomposition(module: TruncatedModule) -> WeightTable:
    """Group the window basis by simultaneous H-eigenvalues."""
    spaces: dict = {}
    weights: dict = {}
    for k in module.basis:
        w = module.weight(k)
        key = weight_key(module, w)
        spaces.setdefault(key, []).append(k)
        weights.setdefault(key, w)
    deg = max((len(v) for v in spaces.values()), default=0)
    return WeightTable(spaces, weights, deg)


# ---------------------------------------------------------------------------
# locally finite / injective

def action_type(module: TruncatedModule, g: GeneratorId, depth: int = 2) -> str:
    """Classify a root vector's window action as LocallyFinite, Injective or Undetermined.

    LocallyFinite: every orbit g^m v from an interior seed reaches zero
    without leaving the window.  Injective: g kills no interior vector.
    """
    if g.kind not in ("E", "F"):
        raise ValueError("action_type needs a root vector (E or F)")
    seeds = module.basis if module.closed else [k for k in module.basis if degree(k) <= module.N - depth]
    fld = module.field
    finite = True
    injective = True
    for k in seeds:
        terms = module.terms(g, k)
        if len(terms) > 1:
            raise ValueError("action_type assumes a monomial action")
        if not terms or all(fld.is_zero(c) for _, c in terms):
            injective = False
        v = SparseVector.basis(k, fld)
        for _ in range(module.N + 2):
            v = apply(module, g, v)
            if v.boundary_mass:
                finite = False
                break
            if v.is_zero():
                break
        else:
            finite = False
    if finite:
        return "LocallyFinite"
    if injective:
        return "Injective"
    return "Undetermined"


# ---------------------------------------------------------------------------
# highest weight vectors and Levi branching

FULL = None


def raising_operators(n: int, levi: int | None) -> list[GeneratorId]:
    return [E(i) for i in range(n) if levi is None or i != levi]


def lowering_operators(n: int, levi: int | None) -> list[GeneratorId]:
    return [F(i) for i in range(n) if levi is None or i != levi]


def _nullspace(module, images: list[list]) -> list[list]:
    """Kernel of the matrix whose columns are the raising images of a weight space."""
    if module.field.exact:
        M = sympy.Matrix(images).T if images else sympy.zeros(0, 0)
        return [list(v) for v in M.nullspace()]
    A = np.array(images, dtype=complex).T
    u, s, vh = np.linalg.svd(A)
    rank = int((s > INT_TOL * max(1.0, s.max(initial=0.0))).sum())
    return [list(row.conj()) for row in vh[rank:]]


def highest_weight_search(module: TruncatedModule, levi: int | None = FULL):
    """Return (vectors, flagged): joint kernels of the raising operators per weight space.

    ``flagged`` lists labels whose raising images left the window; they are
    not counted as highest weight vectors.
    """
    table = weight_decomposition(module)
    raising = raising_operators(module.n, levi)
    found, flagged = [], []
    fld = module.field
    for key, labels in table.spaces.items():
        images = []
        leaked = False
        for k in labels:
            v = SparseVector.basis(k, fld)
            outs = [apply(module, g, v) for g in raising]
            leaked = leaked or any(o.boundary_mass for o in outs)
            images.append(outs)
        if leaked:
            flagged.extend(labels)
            continue
        if len(labels) == 1:
            if all(o.is_zero() for o in images[0]):
                found.append(SparseVector.basis(labels[0], fld))
            continue
        # generic case: coordinates of every raising image on a common support
        support = sorted({k2 for outs in images for o in outs for k2 in o.coeffs})
        cols = []
        for outs in images:
            col = []
            for o in outs:
                col.extend(o[k2] for k2 in support)
            cols.append(col if fld.exact else [fld.to_complex(x) for x in col])
        if not support:
            found.extend(SparseVector.basis(k, fld) for k in labels)
            continue
        for vec in _nullspace(module, cols):
            found.append(SparseVector.build(zip(labels, vec), fld))
    return found, flagged


def highest_weight_vectors(module: TruncatedModule, levi: int | None = FULL) -> list[SparseVector]:
    return highest_weight_search(module, levi)[0]


@dataclass
class BranchSummand:
    seed: MultiIndex
    hw_weight: tuple
    dimension: int
    span: list

    def to_dict(self) -> dict:
        return {"seed": list(self.seed), "hw_weight": [str(x) for x in self.hw_weight],
                "dimension": self.dimension}


@dataclass
class BranchResult:
    status: str
    summands: list
    evidence: list = field(default_factory=list)


def _closure(module, seed: MultiIndex, ops) -> tuple[list, bool]:
    """Labels reached from seed by the given operators; False if the window was left."""
    seen = {seed}
    frontier = [seed]
    inside = True
    fld = module.field
    while frontier:
        nxt = []
        for k in frontier:
            for g in ops:
                for k2, c in module.terms(g, k):
                    if fld.is_zero(c):
                        continue
                    if k2 not in module.index:
                        inside = False
                        continue
                    if k2 not in seen:
                        seen.add(k2)
                        nxt.append(k2)
        frontier = nxt
    return sorted(seen, key=module.index.__getitem__), inside


def branch_levi(module: TruncatedModule, levi: int = 0) -> BranchResult:
    """Decompose the window under the Levi subalgebra l_levi.

    Each l_levi-highest weight label seeds a summand closed under the Levi
    lowering operators.  The spans must partition the window and each must
    be stable under all Levi generators; summands reaching past the window
    make the result Undetermined.
    """
    n = module.n
    seeds_vec, flagged = highest_weight_search(module, levi)
    if any(len(v) != 1 for v in seeds_vec):
        return BranchResult("Undetermined", [], ["non-monomial highest weight vectors"])
    seeds = sorted((next(iter(v.coeffs)) for v in seeds_vec), key=module.index.__getitem__)
    lowering = lowering_operators(n, levi)
    levi_ops = lowering + raising_operators(n, levi) + [H(i) for i in range(n)]
    summands, evidence = [], []
    status = "pass"
    owner: dict = {}
    seed_set = set(seeds)
    for s in seeds:
        span, inside = _closure(module, s, lowering)
        if not inside:
            status = "Undetermined"
            evidence.append({"seed": list(s), "issue": "summand leaves the window"})
        for k in span:
            if k in owner:
                status = "fail"
                evidence.append({"seed": list(s), "issue": f"overlaps summand of {owner[k]}"})
            owner[k] = s
        others = [x for x in span if x in seed_set and x != s]
        if others:
            status = "fail"
            evidence.append({"seed": list(s), "issue": "contains another highest weight vector",
                             "labels": [list(x) for x in others]})
        summands.append(BranchSummand(s, module.weight(s), len(span), span))
    missing = [k for k in module.basis if k not in owner]
    if missing and status == "pass":
        status = "fail"
        evidence.append({"issue": "spans do not exhaust the window", "count": len(missing)})
    if status == "pass":
        for sm in summands:
            members = set(sm.span)
            for k in sm.span:
                for g in levi_ops:
                    for k2, c in module.terms(g, k):
                        if k2 in module.index and k2 not in members and not module.field.is_zero(c):
                            status = "fail"
                            evidence.append({"seed": list(sm.seed), "issue": f"not stable under {g}"})
    if flagged:
        evidence.append({"flagged": [list(k) for k in flagged]})
    return BranchResult(status, summands, evidence)


def central_character(module: TruncatedModule, levi: int, seed: MultiIndex):
    """Eigenvalue of the generator of the center of l_levi on a highest weight label."""
    seed = tuple(seed)
    fld = module.field
    v = SparseVector.basis(seed, fld)
    for g in raising_operators(module.n, levi):
        res = apply(module, g, v)
        if not res.is_zero():
            raise ValueError(f"{seed} is not l_{levi}-highest weight; residual norm "
                             f"{vector_norm(module, res):.3g} under {g}")
    coeffs = CartanData("A", module.n).central_element(levi)
    w = module.weight(seed)
    total = fld.convert(0)
    for c, x in zip(coeffs, w):
        total = total + c * x
    return total


# ---------------------------------------------------------------------------
# finite type

def is_dominant_integral(x, exact: bool) -> bool:
    if exact:
        z = x
        if hasattr(z, "x") and hasattr(z, "y"):  # Gaussian rational
            return not z.y and int(z.x.denominator) == 1 and z.x >= 0
        z = sympy.nsimplify(z)
        return bool(z.is_integer) and bool(z >= 0)
    z = complex(x)
    return abs(z.imag) < INT_TOL and abs(z.real - round(z.real)) < INT_TOL and round(z.real) >= 0


@dataclass
class FiniteTypeResult:
    verdict: str
    evidence: list = field(default_factory=list)
    anchor: str = ANCHOR_FINITE_TYPE


def finite_type_check(obj, levi: int = 0) -> FiniteTypeResult:
    """FiniteType iff every l_levi-highest weight vector has l_levi-dominant integral weight.

    ``obj`` is a TruncatedModule, or a ModuleLabel for the label-level check
    (see ``wmod.classify.label_finite_type``).
    """
    if not isinstance(obj, TruncatedModule):
        from .classify import label_finite_type
        return label_finite_type(obj, levi)
    module = obj
    if module.closed:
        return FiniteTypeResult("FiniteType", [{"reason": "module is finite-dimensional"}])
    vectors, _ = highest_weight_search(module, levi)
    evidence = []
    for v in vectors:
        (k,) = v.coeffs
        w = module.weight(k)
        for i, x in enumerate(w):
            if i == levi:
                continue
            if not is_dominant_integral(x, module.field.exact):
                evidence.append({"seed": list(k), "node": i, "eigenvalue": str(x)})
    return FiniteTypeResult("NotFiniteType" if evidence else "FiniteType", evidence)


# ---------------------------------------------------------------------------
# growth

def gk_growth_degree(module: TruncatedModule, horizon: int | None = None,
                     max_residual: float = 0.05) -> int:
    """Slope of log(cumulative dimension) against log(level) on [H/2, H].

    For closed (finite) modules the level counts are exact for any horizon,
    so the default horizon is 40 and the dimension visibly saturates.
    """
    if module.closed:
        H_ = horizon or max(40, 2 * module.N + 2)
    else:
        if module.N < 2 * module.n:
            raise ValueError("need N >= 2n")
        H_ = horizon or module.N
        if H_ > module.N:
            raise ValueError("horizon beyond the window")
    counts = np.zeros(H_ + 1)
    for k in module.basis:
        d = degree(k)
        if d <= H_:
            counts[d] += 1
    cum = np.cumsum(counts)
    L = np.arange(max(1, H_ // 2), H_ + 1)
    x, y = np.log(L), np.log(cum[L])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    if rms > max_residual or abs(slope - round(slope)) > 0.35:
        raise ValueError(f"growth fit not conclusive: slope {slope:.3f}, residual {rms:.3g}")
    return int(round(slope))


def degree_report(module: TruncatedModule) -> Report:
    table = weight_decomposition(module)
    ok = table.degree == 1
    return Report("degree", module.summary(), "pass" if ok else "fail", None,
                  [{"weights": len(table.spaces), "degree": table.degree,
                    "basis": sum(table.multiplicities())}], ANCHOR_DEGREE)
