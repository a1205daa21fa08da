from math import comb

import pytest
import sympy
from hypothesis import given, strategies as st

from wmod.classify import (A, ModuleLabel, NotDegreeOne, RealFormId, classify, finite_dimension,
                           finite_dimensional_p, hw_to_label, label_finite_type, tuple_to_hw)

entries = st.one_of(
    st.fractions(min_value=-4, max_value=4, max_denominator=5).map(lambda f: f"{f.numerator}/{f.denominator}"),
    st.sampled_from(["a", "m", "-1-m", "-1", "0", "1/2+i"]),
)


@given(st.lists(entries, min_size=1, max_size=4), st.booleans())
def test_label_round_trip(items, dual):
    text = "N(" + ",".join(items) + ")" + ("^*" if dual else "")
    lab = ModuleLabel.parse(text)
    assert ModuleLabel.parse(str(lab)) == lab
    assert lab.contragredient is dual


@pytest.mark.parametrize("params,hw", [
    ((A, 0, 0), (A, 0, 0)),
    ((-1, A, 0), (-1 - A, A, 0)),
    ((-1, -1, A), (0, 0, -1 - A)),
    ((-1, 2, 0, 0), (-3, 2, 0, 0)),
])
def test_tuple_to_hw_and_back(params, hw):
    params = tuple(sympy.sympify(x) for x in params)
    got = tuple_to_hw(params)
    assert all(sympy.simplify(x - sympy.sympify(y)) == 0 for x, y in zip(got, hw))
    assert hw_to_label(got).params == params


def test_tuple_with_no_highest_weight():
    assert tuple_to_hw(tuple(sympy.sympify(x) for x in (1, 1, 1))) is None
    with pytest.raises(NotDegreeOne):
        ModuleLabel.parse("hw: w1 + w2")


def test_explicit_weight_kept_when_ambiguous():
    lab = ModuleLabel.parse("hw: a*w2 + (-1-a)*w3")
    assert lab.hw is not None
    assert ModuleLabel.parse(str(lab)) == lab


@pytest.mark.parametrize("n,m", [(1, 4), (2, 3), (3, 2), (4, 2)])
def test_weyl_dimension_symmetric_powers(n, m):
    # N(m,0,..) is Sym^m of C^{n+1}; hw m*w_n is its dual
    assert finite_dimension(ModuleLabel.parse("N(" + ",".join([str(m)] + ["0"] * (n - 1)) + ")")) == comb(m + n, n)
    if n >= 2:
        assert finite_dimension(ModuleLabel.parse(f"hw: {m}*w{n}")) == comb(m + n, n)


def test_finite_dimensional_predicate():
    assert finite_dimensional_p(ModuleLabel.parse("N(2,0)"))
    assert not finite_dimensional_p(ModuleLabel.parse("N(a,0)"))
    assert not finite_dimensional_p(ModuleLabel.parse("N(-1/2,0)"))
    assert finite_dimension(ModuleLabel.parse("N(-1/2,0)")) is None


def test_symbolic_parameter_gives_conditions():
    r = classify(RealFormId("su", p=1, q=2), "N(a,0)")
    assert r.integrable and r.unitary is None
    assert r.conditions == ["a not in Z>=0", "unitary iff a in R<0"]


def test_trivial_and_nontrivial_finite():
    su = RealFormId("su", p=1, q=2)
    assert classify(su, "N(0,0)").unitary is True
    r = classify(su, "N(2,0)")
    assert r.integrable and r.unitary is False and r.finite_dimensional
    assert classify(RealFormId("sl", n=3), "N(2,0)").integrable


def test_rank_one_uses_first_case_list():
    # SU(1,1): p = 1 and p = n coincide; the p = 1 list decides
    r = classify(RealFormId("su", p=1, q=1), "N(-1/2)")
    assert r.integrable and r.unitary is True and "N(a,0,...,0)" in r.matched_family


def test_contragredient_same_verdict():
    form = RealFormId("su", p=2, q=1)
    a, b = classify(form, "N(-1,1/2)"), classify(form, "N(-1,1/2)^*")
    assert (a.integrable, a.unitary) == (b.integrable, b.unitary)
    assert "contragredient" in b.matched_family


def test_negative_integer_tail_is_finite_dimensional():
    # N(-1,-3) has highest weight 2*w2; the finite-dimensional branch decides before the case list
    r = classify(RealFormId("su", p=2, q=1), "N(-1,-3)")
    assert r.finite_dimensional and r.integrable and r.unitary is False


def test_symplectic_metaplectic_at_rank_one():
    form = RealFormId("sp", n=1)
    assert "even" in classify(form, "M(-1)").matched_family
    assert "odd" in classify(form, "M(-2)").matched_family
    assert not classify(form, "M(-3/2)").integrable


def test_wrong_family_or_rank():
    with pytest.raises(NotDegreeOne):
        classify(RealFormId("sp", n=2), "N(-1,0)")
    with pytest.raises(NotDegreeOne):
        classify(RealFormId("su", p=1, q=2), "N(-1,0,0)")
    with pytest.raises(ValueError):
        RealFormId("sl", n=2)


def test_label_finite_type():
    assert label_finite_type("N(-1,-1,a)", 2).verdict == "FiniteType"
    # -1-a sits at node 0, which l_1 keeps
    assert label_finite_type("N(-1,a,0)", 1).verdict == "NotFiniteType"
    r = label_finite_type("N(1/2,0,0)", 1)
    assert r.verdict == "NotFiniteType"
    assert any(e.get("node") == 0 and e["reason"] == "non-integral" for e in r.evidence)
    r = label_finite_type("N(-1,-1,-3)", 0)
    assert r.verdict == "FiniteType"


def test_json_output_is_stable():
    r = classify(RealFormId("sp", n=2), "M(-1,-2)")
    assert r.to_json() == classify(RealFormId("sp", n=2), "M(-1,-2)").to_json()
    assert r.to_json().endswith("\n")
