from math import comb

import pytest

from wmod.algebra import E, F, Scalar
from wmod.modules import ModuleParams, build_realization, finite
from wmod.verify import (action_type, branch_levi, central_character, degree_report, finite_type_check,
                         gk_growth_degree, highest_weight_vectors, verify_relations, weight_decomposition)


def bbl(n, a, N, exact=None):
    return build_realization("bbl", ModuleParams(n, Scalar.parse(a), N), exact)


def test_relations_pass_and_report_classes():
    rep = verify_relations(bbl(2, "-1/2", 6))
    assert rep.passed and rep.max_defect == 0
    assert {e["class"] for e in rep.evidence} >= {"cartan", "root-pair", "serre"}


def test_corrupted_coefficient_is_caught():
    m = bbl(2, "-1/2", 6)
    table = m.table(E(1))
    k = (0, 2)
    (k2, c), = table[k]
    table[k] = ((k2, c + 1),)
    rep = verify_relations(m)
    assert not rep.passed and rep.max_defect > 0


def test_float_path_tolerance():
    rep = verify_relations(bbl(3, "-1+0.5i", 6, exact=False))
    assert rep.passed and 0 <= rep.max_defect <= 1e-9


def test_small_window_rejected():
    with pytest.raises(ValueError):
        verify_relations(bbl(2, "-1/2", 2))


def test_weight_spaces_are_lines():
    m = bbl(3, "1/3", 5)
    table = weight_decomposition(m)
    assert table.degree == 1 and len(table.spaces) == len(m.basis)
    assert degree_report(m).passed


@pytest.mark.parametrize("a,expect", [("-1/2", "Injective"), ("-1+0.5i", "Injective")])
def test_f0_injective_off_the_integers(a, expect):
    assert action_type(bbl(2, a, 8), F(0)) == expect


def test_root_vectors_locally_finite():
    m = bbl(2, "-1/2", 8)
    assert action_type(m, E(0)) == "LocallyFinite"
    assert action_type(m, E(1)) == "LocallyFinite"
    assert action_type(finite(2, 3), F(0)) == "LocallyFinite"


def test_highest_weight_vector_is_vacuum():
    vecs = highest_weight_vectors(bbl(2, "-1/2", 5))
    assert [tuple(v.coeffs) for v in vecs] == [((0, 0),)]


@pytest.mark.parametrize("levi", [0, 1])
def test_branching_partitions_window(levi):
    m = bbl(2, "-1/2", 6)
    res = branch_levi(m, levi)
    if levi == 0:
        assert res.status == "pass"
        assert [s.dimension for s in res.summands] == [comb(K + 1, 1) for K in range(7)]
    else:
        # the l_1 summands are infinite-dimensional; the window cuts them off
        assert res.status == "Undetermined"
        assert all(e["issue"] == "summand leaves the window" for e in res.evidence if "issue" in e)
    spans = [k for s in res.summands for k in s.span]
    assert len(spans) == len(set(spans))


def test_central_character_requires_highest_weight():
    m = bbl(2, "-1/2", 6)
    assert m.field.to_complex(central_character(m, 0, (3, 0))) == 2 * -0.5 - 3 * 3
    with pytest.raises(ValueError):
        central_character(m, 0, (2, 1))


def test_finite_type_on_windows():
    assert finite_type_check(bbl(2, "-1/2", 6), 0).verdict == "FiniteType"
    assert finite_type_check(finite(2, 2), 1).verdict == "FiniteType"


@pytest.mark.parametrize("n", [1, 2, 3])
def test_gk_degree(n):
    assert gk_growth_degree(bbl(n, "-1/2", 30, exact=False)) == n


def test_gk_needs_large_window():
    with pytest.raises(ValueError):
        gk_growth_degree(bbl(3, "-1/2", 4, exact=False))
    assert gk_growth_degree(finite(3, 2)) == 0
