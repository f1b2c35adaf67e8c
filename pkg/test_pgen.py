"""
Test Descendant Generation and the Constrained Search

Covers:
1. Automorphism groups
2. Subspace enumeration and orbits
3. Immediate descendants of small groups
4. AQI fingerprints, refinement and exact matching
5. The search from [3,3] ending at Q1 and Q2
"""

from collections import Counter

import pytest

from models.constraint_model import AQIConstraint
from services import pcgroup, pgen, pquotient
from services.abelian import AbelianInvariants
from services.errors import PresentationError, ResourceLimitError


def test_automorphism_groups():
    """Test |Aut| of small groups"""
    print("\n" + "="*70)
    print("TEST 1: Automorphism Groups")
    print("="*70)

    assert len(pgen.automorphism_group(pcgroup.cyclic(1))) == 2
    assert len(pgen.automorphism_group(pcgroup.cyclic(2))) == 6
    assert len(pgen.automorphism_group(pcgroup.elementary_abelian(2))) == 48

    ea = pcgroup.elementary_abelian(2)
    auts = pgen.automorphism_group(ea)
    images = {a.pc_images for a in auts}
    for first in auts[:8]:
        for second in auts:
            assert pgen.compose(ea, first, second) in images

    with pytest.raises(ResourceLimitError):
        pgen.automorphism_group(pcgroup.elementary_abelian(4), cap=27)

    print("\n✅ Test Passed: |GL_2(F_3)| = 48")


def test_subspaces():
    """Test subspace counts of F_3^3 and orbit splitting"""
    assert len(pgen.subspaces(3, 0)) == 1
    assert len(pgen.subspaces(3, 1)) == 13
    assert len(pgen.subspaces(3, 2)) == 13
    assert len(pgen.subspaces(3, 3)) == 1
    assert all(pgen._rref(u) == u for u in pgen.subspaces(3, 2))

    identity = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    lines = pgen.subspaces(3, 1)
    assert len(pgen.orbit_representatives(lines, [identity])) == 13

    # five lines are fixed by the swap, the other eight pair up
    swap = ((0, 1, 0), (1, 0, 0), (0, 0, 1))
    assert len(pgen.orbit_representatives(lines, [swap])) == 9

    nucleus = pgen.subspaces(3, 3)[0]
    assert len(pgen.allowable_subspaces(3, nucleus, 1)) == 13
    line = ((0, 0, 1),)
    assert len(pgen.allowable_subspaces(3, line, 1)) == 9


def test_immediate_descendants_small():
    """Test descendants of C_3 and C_3 x C_3"""
    print("\n" + "="*70)
    print("TEST 2: Immediate Descendants")
    print("="*70)

    c3 = pgen.immediate_descendants(pcgroup.cyclic(1))
    assert len(c3) == 1
    assert pcgroup.isomorphic(c3[0], pcgroup.cyclic(2))

    ea = pcgroup.elementary_abelian(2)
    children = pgen.immediate_descendants(ea)
    orders = sorted(child.order for child in children)
    print(f"   • orders of descendants of [3,3]: {orders}")
    assert orders == [27, 27, 27, 81, 81, 81, 243]
    for child in children:
        assert child.is_consistent()
        assert child.p_class() == 2
        assert child.generator_rank() == 2
        parent, _ = child.quotient(child.lower_p_central_series()[1])
        assert pcgroup.isomorphic(parent, ea)

    for i, a in enumerate(children):
        for b in children[i + 1:]:
            if a.order == b.order:
                assert not pcgroup.isomorphic(a, b)

    print("\n✅ Test Passed: 7 descendants, pairwise non-isomorphic")


def test_descendants_respect_order_cap():
    """Test the covering group order is checked before any orbit work"""
    assert pquotient.p_cover(pcgroup.elementary_abelian(2)).cover.order == 243
    with pytest.raises(ResourceLimitError):
        pgen.immediate_descendants(pcgroup.elementary_abelian(2), order_cap=81)


def test_aqi_fingerprints_and_pruning():
    """Test fingerprints against the two targets"""
    print("\n" + "="*70)
    print("TEST 3: AQI Pruning")
    print("="*70)

    first = pgen.identify3grp_constraint()
    higher = pgen.higher_constraint()

    q1_fp = pgen.aqi_fingerprint(pcgroup.q1())
    whole, maxima = q1_fp
    assert whole == AbelianInvariants((3, 3))
    assert Counter(str(m) for m in maxima) == Counter({"[3, 9]": 3, "[3, 3, 3]": 1})
    assert pgen.matches_exactly(q1_fp, first)
    assert not pgen.matches_exactly(q1_fp, higher)
    assert pgen.can_refine(q1_fp, first)

    q2_fp = pgen.aqi_fingerprint(pcgroup.q2())
    assert pgen.matches_exactly(q2_fp, first)

    # x1^3 = x4^2 instead of x2^3 = x4^2 gives one [3,9] and three [3,3,3]
    printed_whole, printed_maxima = pgen.aqi_fingerprint(pcgroup.q2_as_printed())
    assert printed_whole == AbelianInvariants((3, 3))
    assert Counter(str(m) for m in printed_maxima) == Counter({"[3, 9]": 1, "[3, 3, 3]": 3})
    assert not pgen.matches_exactly((printed_whole, printed_maxima), first)

    ea_fp = pgen.aqi_fingerprint(pcgroup.elementary_abelian(2))
    assert pgen.can_refine(ea_fp, first)
    assert pgen.can_refine(ea_fp, higher)
    assert not pgen.matches_exactly(ea_fp, first)

    assert not pgen.can_refine(pgen.aqi_fingerprint(pcgroup.cyclic(2)), first)

    # C_9 x C_3 has a maximal subgroup [3,3] but whole [3,9]
    abelian = pcgroup.PcGroup(3, powers={0: {1: 1}})
    assert not pgen.can_refine(pgen.aqi_fingerprint(abelian), first)

    print("\n✅ Test Passed: Pruning predicate behaves")


def test_constraint_model():
    """Test constraint files and validation"""
    text = "whole: 3,3\nmax: 3,9 | 3,9 | 3,9 | 3,3,3\n"
    constraint = AQIConstraint.from_text(text)
    assert constraint == pgen.identify3grp_constraint()
    assert AQIConstraint.from_text(constraint.to_text()) == constraint

    with pytest.raises(ValueError):
        AQIConstraint(whole=AbelianInvariants((3, 3)), maximal=(AbelianInvariants((3, 9)),) * 3)
    with pytest.raises(PresentationError):
        AQIConstraint.from_text("whole: 3,3\n")
    with pytest.raises(PresentationError):
        AQIConstraint.from_text("whole: 3,3\nmaximal: 3,9\n")


@pytest.mark.slow
def test_constrained_search_finds_q1_q2():
    """Test the search from [3,3] ends at exactly Q1 and Q2"""
    print("\n" + "="*70)
    print("TEST 4: Constrained Search")
    print("="*70)

    result = pgen.descendant_tree(pcgroup.elementary_abelian(2), pgen.identify3grp_constraint())
    print(f"   • nodes per class {result.nodes_per_class}, pruned {result.pruned_per_class}")
    groups = result.groups
    assert len(groups) == 2
    assert all(g.order == 243 for g in groups)
    assert any(pcgroup.isomorphic(g, pcgroup.q1()) for g in groups)
    assert any(pcgroup.isomorphic(g, pcgroup.q2()) for g in groups)
    assert not any(pcgroup.isomorphic(g, pcgroup.q2_as_printed()) for g in groups)
    assert result.pruned_per_class

    print("\n✅ Test Passed: Two candidates")


def test_search_with_unreachable_root():
    """Test a root violating the target yields nothing"""
    result = pgen.descendant_tree(pcgroup.cyclic(2), pgen.identify3grp_constraint())
    assert result.groups == []
    assert result.nodes_per_class == {}

    cyclic_target = AQIConstraint(whole=AbelianInvariants((3,)), maximal=(AbelianInvariants(),))
    assert pgen.constrained_search(pcgroup.elementary_abelian(2), cyclic_target) == []
