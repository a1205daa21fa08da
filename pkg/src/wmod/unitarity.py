"""Hilbert structure, unitarity and integrability evidence.

The Hilbert space is the window spanned by the basis labels with
<e(k), e(l)> = delta_{kl} norm_sq(k).  Most computations work with the
orthonormalized matrices W^{1/2} A W^{-1/2}, where W = diag(norm_sq).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .algebra import (E, F, GeneratorId, MultiIndex, Scalar, SparseVector, chevalley_generators,
                      degree, enumerate_basis, real_form_generators)
from .modules import Kind, ModuleParams, TruncatedModule, build_realization, guard_parameter
from .report import Report, worse

ANCHOR_UNITARY = "unitary if and only if a in R_{<0}"
ANCHOR_ADJOINT = "H_j(a)* = H_j(a), E_j(a)* = F_j(a) for j>0 and E_0(a)* = -F_0(a)"
ANCHOR_JM = "We define inductively a norm"
ANCHOR_BOUNDED = "the above supremum is finite"
ANCHOR_GLOBAL = "Consider the following 1-parameter families"
ANCHOR_SPHERE = "||P(k)||^2 = prod k_j! / prod_{j=1}^{|k|} (j+n-1)"


def workers() -> int:
    try:
        return max(1, int(os.environ.get("WMOD_THREADS", "")))
    except ValueError:
        return min(8, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# inner products

def inner_product(module: TruncatedModule, u: SparseVector, v: SparseVector) -> complex:
    """<u, v> = sum_k u_k conj(v_k) norm_sq(k); linear in u."""
    if u.field is not v.field:
        raise ValueError("mode mismatch between vectors")
    to_c = u.field.to_complex
    total = 0j
    for k, c in u.coeffs.items():
        if k in v.coeffs:
            total += to_c(c) * to_c(v.coeffs[k]).conjugate() * module.norm_sq(k)
    return total


def _sqrt_weights(module: TruncatedModule) -> np.ndarray:
    return np.sqrt(module.norm_sq_array())


def orthonormal_matrix(module: TruncatedModule, g: GeneratorId, s: np.ndarray | None = None) -> sp.csr_matrix:
    """W^{1/2} A W^{-1/2}: the matrix of g in the orthonormal basis e(k)/||e(k)||."""
    s = _sqrt_weights(module) if s is None else s
    return (sp.diags(s) @ module.matrix(g) @ sp.diags(1.0 / s)).tocsr()


def _max_abs(m: sp.spmatrix, mask: np.ndarray) -> tuple[float, int, int]:
    m = sp.coo_matrix(m)
    keep = mask[m.row] & mask[m.col]
    if not keep.any():
        return 0.0, -1, -1
    vals = np.abs(m.data[keep])
    i = int(np.argmax(vals))
    return float(vals[i]), int(m.row[keep][i]), int(m.col[keep][i])


def adjoint_defect(module: TruncatedModule, tol: float = 1e-10) -> Report:
    """Window test of H* = H, E_j* = F_j (j >= 1) and E_0* = -F_0.

    Pair defects are normalized by ||e(k)|| ||e(l)||, i.e. they are entries of
    the orthonormalized matrices.  Only labels with |k| <= N - 1 are used so
    every pairing involves two in-window vectors.
    """
    n = module.n
    s = _sqrt_weights(module)
    mask = np.array([degree(k) <= module.N - 1 for k in module.basis]) if not module.closed \
        else np.ones(len(module.basis), dtype=bool)
    evidence = []
    worst = 0.0

    def record(name, mat):
        nonlocal worst
        val, r, c = _max_abs(mat, mask)
        item = {"pair": name, "max_defect": val}
        if r >= 0:
            item["at"] = [list(module.basis[c]), list(module.basis[r])]
        evidence.append(item)
        worst = worse(worst, val)

    e0, f0 = orthonormal_matrix(module, E(0), s), orthonormal_matrix(module, F(0), s)
    record("E0* = -F0", f0 + e0.conj().T)
    for j in range(1, n):
        ej, fj = orthonormal_matrix(module, E(j), s), orthonormal_matrix(module, F(j), s)
        record(f"E{j}* = F{j}", ej - fj.conj().T)
    for j in range(n):
        h = orthonormal_matrix(module, GeneratorId("H", j), s)
        record(f"H{j}* = H{j}", h - h.conj().T)
    status = "Unitary" if worst <= tol else "NotUnitary"
    return Report("unitarity", module.summary() | {"tol": tol}, status, worst, evidence,
                  f"{ANCHOR_UNITARY}; {ANCHOR_ADJOINT}")


# ---------------------------------------------------------------------------
# Jorgensen-Moore norms

@dataclass
class NormTower:
    """Norms ||u||_{l+1} = max(||u||_l, max_{A in S} ||A u||_l) on a module window.

    ``generators`` is S~_0 = {H_j, E_j, F_j} by default; ``real_form=True``
    switches to S_0 = {iH_j, X_j, Y_j}.
    """
    module: TruncatedModule
    real_form: bool = False
    _mats: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        n = self.module.n
        gens = real_form_generators(n) if self.real_form else chevalley_generators(n)
        self.generators = gens
        self._mats = [self.module.matrix(g) for g in gens]
        self._w = self.module.norm_sq_array()

    def hilbert(self, x: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(x) ** 2 * self._w)))

    def column_norms(self, M: sp.spmatrix) -> np.ndarray:
        """Hilbert norm of every column of M (columns are images of basis vectors)."""
        M = sp.csc_matrix(M)
        sq = M.multiply(M.conj()).real.T @ self._w
        return np.sqrt(np.asarray(sq).ravel())

    def level_matrices(self, level: int, start: sp.spmatrix | None = None):
        """Yield W_word @ start for every word of length <= level (tree-shared products)."""
        dim = len(self.module.basis)
        layer = [sp.identity(dim, dtype=complex, format="csr") if start is None else sp.csr_matrix(start)]
        yield layer[0]
        for _ in range(level):
            layer = [(A @ P).tocsr() for P in layer for A in self._mats]
            yield from layer


def _vector(module: TruncatedModule, u: SparseVector) -> np.ndarray:
    x = np.zeros(len(module.basis), dtype=complex)
    for k, c in u.coeffs.items():
        x[module.index[k]] = u.field.to_complex(c)
    return x


def jm_norm(tower: NormTower, u: SparseVector, level: int) -> float:
    """||u||_level; the words applied to u must stay inside the window."""
    module = tower.module
    if u.boundary_mass:
        raise ValueError("vector already left the window")
    if not module.closed and u.max_degree() + level > module.N:
        raise ValueError(f"window exhausted: need N >= {u.max_degree() + level}")
    vecs = [_vector(module, u)]
    best = tower.hilbert(vecs[0])
    for _ in range(level):
        vecs = [A @ x for x in vecs for A in tower._mats]
        best = max(best, max(tower.hilbert(x) for x in vecs))
    return best


def perturbation_matrices(module: TruncatedModule) -> dict[str, sp.csr_matrix]:
    """Window matrices of f(E0) = E0(a) - E0 and f(F0) = F0(a) - F0."""
    if module.kind is not Kind.DEFORMED_E:
        raise ValueError("perturbations are defined for the deformed realization")
    rows_e, cols_e, val_e, rows_f, cols_f, val_f = [], [], [], [], [], []
    to_c = module.field.to_complex
    for i, k in enumerate(module.basis):
        d = module.deform(k)
        if k[0] > 0:
            rows_e.append(module.index[(k[0] - 1,) + k[1:]])
            cols_e.append(i)
            val_e.append(to_c(d.m_minus))
        up = (k[0] + 1,) + k[1:]
        if up in module.index:
            rows_f.append(module.index[up])
            cols_f.append(i)
            val_f.append(to_c(d.m_plus))
    dim = len(module.basis)
    return {
        "fE0": sp.csr_matrix((val_e, (rows_e, cols_e)), shape=(dim, dim), dtype=complex),
        "fF0": sp.csr_matrix((val_f, (rows_f, cols_f)), shape=(dim, dim), dtype=complex),
    }


def perturbation_bound(n: int, a: Scalar, levels=(0, 1, 2), ladder=(50, 100, 200),
                       real_form: bool = False, rel_tol: float = 0.10) -> Report:
    """Estimate ||f(E0)||_l and ||f(F0)||_l on basis vectors |k| <= K for each K in the ladder.

    The estimate is max_k ||f e(k)||_l / ||e(k)||_l.  One float window of
    size max(K) + max(l) + 1 serves the whole ladder.
    """
    a = Scalar.of(a)
    guard_parameter(a)
    Kmax, lmax = max(ladder), max(levels)
    module = build_realization(Kind.DEFORMED_E, ModuleParams(n, a, Kmax + lmax + 1), exact=False)
    tower = NormTower(module, real_form)
    pert = perturbation_matrices(module)
    deg = np.array([degree(k) for k in module.basis])
    rows = []
    estimates: dict = {}
    for lev in levels:
        base = np.zeros(len(deg))
        for M in tower.level_matrices(lev):
            base = np.maximum(base, tower.column_norms(M))
        for name, P in pert.items():
            num = np.zeros(len(deg))
            for M in tower.level_matrices(lev, P):
                num = np.maximum(num, tower.column_norms(M))
            ratio = num / base
            for K in ladder:
                val = float(ratio[deg <= K].max())
                estimates[(lev, name, K)] = val
                rows.append({"level": lev, "operator": name, "K": K, "estimate": val})
    evidence, worst, ok = [], 0.0, True
    for lev in levels:
        for name in pert:
            vals = [estimates[(lev, name, K)] for K in ladder]
            top = max(vals)
            spread = 0.0 if top == 0 else (top - min(vals)) / top
            worst = worse(worst, spread)
            ok = ok and spread <= rel_tol
            evidence.append({"level": lev, "operator": name, "estimates": vals, "spread": spread})
    params = {"n": n, "a": str(a), "levels": list(levels), "ladder": list(ladder),
              "generators": "S0" if real_form else "S~0", "rel_tol": rel_tol}
    return Report("perturbation-bound", params, "pass" if ok else "fail", worst, evidence,
                  ANCHOR_BOUNDED, {"rows": rows})


# ---------------------------------------------------------------------------
# boundedness profile

@dataclass
class Profile:
    L: np.ndarray
    values: np.ndarray
    running_sup: np.ndarray
    sup: float
    tail: float
    stabilization: float

    def rows(self):
        return zip(self.L.tolist(), self.values.tolist(), self.running_sup.tolist())


def ratio_down_minus_one(n: int, a: Scalar, L: np.ndarray) -> np.ndarray:
    """mu(L-1)/mu(L) - 1 without cancellation.

    With r^2 = |L-1-a| / (L-1+n), r - 1 = (r^2 - 1) / (r + 1) and
    |z| - (L-1+n) is rearranged as (|z| - Re z) - (n + Re a).
    """
    z = a.to_complex()
    re = L - 1 - z.real
    im = z.imag
    mod = np.hypot(re, im)
    gap = np.where(re > 0, im * im / np.maximum(mod + re, 1e-300), mod - re)
    num = gap - (n + z.real)
    den = L - 1 + n
    r2m1 = num / den
    r = np.sqrt(mod / den)
    return r2m1 / (r + 1)


def boundedness_profile(n: int, a, K: int) -> Profile:
    """b(L) = L (L + n - 2) (mu(L-1)/mu(L) - 1)^2 for L = 1..K.

    The tail estimate regresses b on 1/L over [K/2, K] and reports the
    intercept.  ``stabilization`` is 1 - max_{[K/2,K]} b / max b.
    """
    a = Scalar.of(a)
    guard_parameter(a)
    if K < 4:
        raise ValueError("K must be >= 4")
    L = np.arange(1, K + 1, dtype=float)
    vals = L * (L + n - 2) * ratio_down_minus_one(n, a, L) ** 2
    run = np.maximum.accumulate(vals)
    sup = float(run[-1])
    half = L >= K / 2
    if np.all(vals[half] == 0):
        tail = 0.0
    else:
        slope, tail = np.polyfit(1.0 / L[half], vals[half], 1)
    stab = 0.0 if sup == 0 else 1.0 - float(vals[half].max()) / sup
    return Profile(L.astype(int), vals, run, sup, float(tail), stab)


def tail_limit(n: int, a) -> float:
    """Large-L limit of b(L): (Re a + n)^2 / 4."""
    return (Scalar.of(a).to_complex().real + n) ** 2 / 4


def profile_report(n: int, a, K: int, rel_tol: float = 0.05) -> Report:
    a = Scalar.of(a)
    prof = boundedness_profile(n, a, K)
    limit = tail_limit(n, a)
    tail_err = abs(prof.tail - limit) / limit if limit else abs(prof.tail)
    ok = prof.stabilization <= rel_tol and tail_err <= rel_tol
    ev = [{"sup": prof.sup, "tail_estimate": prof.tail, "tail_limit": limit,
           "tail_rel_error": tail_err, "last_half_gap": prof.stabilization}]
    return Report("boundedness-profile", {"n": n, "a": str(a), "K": K, "rel_tol": rel_tol},
                  "pass" if ok else "fail", tail_err, ev, ANCHOR_BOUNDED)


# ---------------------------------------------------------------------------
# one-parameter subgroups

@dataclass(frozen=True)
class SubgroupId:
    """One of the families e^{itH_j}, e^{tX_j}, e^{tY_j}."""
    kind: str  # "iH", "X" or "Y"
    index: int

    @classmethod
    def parse(cls, text: str) -> "SubgroupId":
        g = GeneratorId.parse(text)
        if g.kind not in ("iH", "X", "Y"):
            raise ValueError(f"not a one-parameter family: {text}")
        return cls(g.kind, g.index)

    @property
    def generator(self) -> GeneratorId:
        return GeneratorId(self.kind, self.index)

    def __str__(self) -> str:
        return f"{self.kind}{self.index}"

    def matrix(self, n: int, t: float) -> np.ndarray:
        """The (n+1)x(n+1) group element, rows and columns labelled 0..n."""
        j = self.index
        if j >= n:
            raise ValueError(f"{self} needs index < {n}")
        g = np.eye(n + 1, dtype=complex)
        p, q = j, j + 1
        if self.kind == "iH":
            g[p, p], g[q, q] = np.exp(-1j * t), np.exp(1j * t)
        elif j == 0:
            c, s = math.cosh(t), math.sinh(t)
            off = (-s, -s) if self.kind == "X" else (-1j * s, 1j * s)
            g[p, p] = g[q, q] = c
            g[p, q], g[q, p] = off
        else:
            c, s = math.cos(t), math.sin(t)
            off = (-s, s) if self.kind == "X" else (-1j * s, -1j * s)
            g[p, p] = g[q, q] = c
            g[p, q], g[q, p] = off
        return g


def all_subgroups(n: int) -> list[SubgroupId]:
    return [SubgroupId(kind, j) for kind in ("iH", "X", "Y") for j in range(n)]


class PowerSeries:
    """Multivariate polynomial in z_1..z_n truncated at total degree ``cap``."""

    def __init__(self, n: int, cap: int, coeffs: dict | None = None):
        self.n, self.cap = n, cap
        self.coeffs = coeffs or {}

    @classmethod
    def constant(cls, n, cap, c) -> "PowerSeries":
        return cls(n, cap, {(0,) * n: complex(c)})

    @classmethod
    def linear(cls, n, cap, c0, cs) -> "PowerSeries":
        out = {(0,) * n: complex(c0)}
        for j, c in enumerate(cs):
            if c != 0:
                out[tuple(int(i == j) for i in range(n))] = complex(c)
        return cls(n, cap, out)

    def __mul__(self, other: "PowerSeries") -> "PowerSeries":
        out: dict = {}
        for k1, c1 in self.coeffs.items():
            d1 = sum(k1)
            for k2, c2 in other.coeffs.items():
                if d1 + sum(k2) > self.cap:
                    continue
                k = tuple(x + y for x, y in zip(k1, k2))
                out[k] = out.get(k, 0) + c1 * c2
        return PowerSeries(self.n, self.cap, out)

    def __pow__(self, m: int) -> "PowerSeries":
        out = PowerSeries.constant(self.n, self.cap, 1)
        base = self
        while m:
            if m & 1:
                out = out * base
            base = base * base
            m >>= 1
        return out

    def binomial_power(self, s: float) -> "PowerSeries":
        """(c0 + w)^{-s} for this series c0 + w, via the binomial series in w/c0."""
        zero = (0,) * self.n
        c0 = self.coeffs.get(zero, 0)
        w = PowerSeries(self.n, self.cap, {k: c / c0 for k, c in self.coeffs.items() if k != zero})
        out = PowerSeries.constant(self.n, self.cap, 1)
        term = PowerSeries.constant(self.n, self.cap, 1)
        coef = 1.0
        for m in range(1, self.cap + 1):
            term = term * w
            # binom(-s, m) by recurrence; scipy's binom is nan at negative integers
            coef *= (-s - m + 1) / m
            for k, c in term.coeffs.items():
                out.coeffs[k] = out.coeffs.get(k, 0) + coef * c
        scale = c0 ** (-s)
        return PowerSeries(self.n, self.cap, {k: c * scale for k, c in out.coeffs.items()})


def group_action_coefficients(n: int, g: np.ndarray, k: MultiIndex, cap: int) -> dict:
    """Taylor coefficients (degree <= cap) of rho(g) P(k).

    rho(g) P(k)(z) = L_0^{-n-|k|} prod_m L_m^{k_m}, where L = g^{-1} (1, z).
    """
    ginv = np.linalg.inv(g)
    rows = [PowerSeries.linear(n, cap, ginv[m, 0], ginv[m, 1:]) for m in range(n + 1)]
    c0 = ginv[0, 0]
    reach = float(np.sqrt(np.sum(np.abs(ginv[0, 1:] / c0) ** 2)))
    if reach >= 0.9:
        raise ValueError(f"cocycle denominator too close to 0 (|w| up to {reach:.3f})")
    out = rows[0].binomial_power(n + degree(k))
    for m in range(1, n + 1):
        if k[m - 1]:
            out = out * rows[m] ** k[m - 1]
    return out.coeffs


def global_vs_infinitesimal(n: int, sub: SubgroupId, t: float, N: int, buffer: int = 4) -> Report:
    """Compare rho(e^{tG}) P(k) with exp(t G_window) P(k) on coefficients of degree <= N - buffer."""
    if abs(t) > 0.25:
        raise ValueError("|t| must be <= 0.25")
    if buffer < 2 or buffer > N:
        raise ValueError("need 2 <= buffer <= N")
    module = build_realization(Kind.BASE_P, ModuleParams(n, None, N), exact=False)
    G = module.matrix(sub.generator).tocsc()
    cap = N - buffer
    cols = [i for i, k in enumerate(module.basis) if degree(k) <= cap]
    start = np.zeros((len(module.basis), len(cols)), dtype=complex)
    start[cols, range(len(cols))] = 1.0
    flow = expm_multiply(t * G, start) if t else start
    g = sub.matrix(n, t)
    worst, where = 0.0, None
    for c, i in enumerate(cols):
        k = module.basis[i]
        exact_side = group_action_coefficients(n, g, k, cap)
        for kk in module.basis:
            if degree(kk) > cap:
                continue
            d = abs(exact_side.get(kk, 0) - flow[module.index[kk], c])
            d = worse(0.0, d)
            if d > worst:
                worst, where = d, (k, kk)
    ev = [{"max_discrepancy": worst, "at": None if where is None else [list(where[0]), list(where[1])]}]
    params = {"n": n, "subgroup": str(sub), "t": t, "N": N, "buffer": buffer}
    return Report("global-vs-infinitesimal", params, "pass", worst, ev, ANCHOR_GLOBAL)


# ---------------------------------------------------------------------------
# sphere integrals

@dataclass(frozen=True)
class SphereGeometry:
    n: int

    @property
    def omega(self) -> float:
        """Volume 2 pi^n / (n-1)! of the unit sphere in C^n."""
        return 2 * math.pi ** self.n / math.factorial(self.n - 1)


def closed_form(k: MultiIndex, l: MultiIndex) -> float:
    if tuple(k) != tuple(l):
        return 0.0
    n = len(k)
    logv = sum(math.lgamma(x + 1) for x in k) - sum(math.log(j + n - 1) for j in range(1, degree(k) + 1))
    return math.exp(logv)


@dataclass
class MonteCarlo:
    seed: int = 0
    samples: int = 1_000_000
    chunk: int = 100_000


@dataclass
class SphereEstimate:
    estimate: complex
    stderr: float
    samples: int
    seed: int | None

    def to_dict(self) -> dict:
        return {"estimate_re": self.estimate.real, "estimate_im": self.estimate.imag,
                "stderr": self.stderr, "samples": self.samples, "seed": self.seed}


def _mc_chunk(n, labels, seed_seq, size):
    rng = np.random.default_rng(seed_seq)
    x = rng.standard_normal((size, 2 * n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    z = x[:, :n] + 1j * x[:, n:]
    powers = np.stack([np.prod(z ** np.array(k), axis=1) for k in labels], axis=1)
    prod = powers.T @ powers.conj()
    sq = (np.abs(powers) ** 2).T @ (np.abs(powers) ** 2)
    return prod, sq


def sphere_gram(n: int, labels: list[MultiIndex], method: MonteCarlo) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo Gram matrix of the monomials and its standard errors.

    Chunks get independent substreams spawned from the seed, and are reduced
    in a fixed order, so the result does not depend on the worker count.
    """
    if method.samples < 1000:
        raise ValueError("need at least 10^3 samples")
    sizes = [method.chunk] * (method.samples // method.chunk)
    if method.samples % method.chunk:
        sizes.append(method.samples % method.chunk)
    seqs = np.random.SeedSequence(method.seed).spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=workers()) as pool:
        parts = list(pool.map(lambda a: _mc_chunk(n, labels, *a), zip(seqs, sizes)))
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    N = method.samples
    mean = total / N
    var = np.maximum(total_sq / N - np.abs(mean) ** 2, 0.0)
    return mean, np.sqrt(var / N)


def sphere_inner(n: int, k: MultiIndex, l: MultiIndex, method="ClosedForm"):
    """(1/Omega_n) int_S P(k) conj(P(l)) dsigma, in closed form or by Monte Carlo."""
    k, l = tuple(k), tuple(l)
    if len(k) != n or len(l) != n:
        raise ValueError("label length must equal n")
    if method == "ClosedForm":
        return complex(closed_form(k, l))
    if not isinstance(method, MonteCarlo):
        raise ValueError(f"unknown method {method!r}")
    labels = [k] if k == l else [k, l]
    mean, err = sphere_gram(n, labels, method)
    j = len(labels) - 1
    return SphereEstimate(complex(mean[0, j]), float(err[0, j]), method.samples, method.seed)


def sphere_report(n: int, top: int, method: MonteCarlo, sigmas: float = 3.0) -> Report:
    labels = enumerate_basis(n, top)
    mean, err = sphere_gram(n, labels, method)
    worst = 0.0
    evidence = []
    for i, k in enumerate(labels):
        for j, l in enumerate(labels):
            ref = closed_form(k, l)
            # on the circle |P(k)| = 1 exactly; rounding is the only spread there
            z = worse(0.0, abs(mean[i, j] - ref) / max(err[i, j], 1e-12))
            if z > worst:
                worst = z
            if i == j or z > sigmas:
                evidence.append({"k": list(k), "l": list(l), "closed_form": ref,
                                 "estimate_re": float(mean[i, j].real), "estimate_im": float(mean[i, j].imag),
                                 "stderr": float(err[i, j]), "z": z})
    params = {"n": n, "max_degree": top, "samples": method.samples, "seed": method.seed, "sigmas": sigmas}
    return Report("sphere", params, "pass" if worst <= sigmas else "fail", worst, evidence, ANCHOR_SPHERE)
