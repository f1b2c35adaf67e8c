"""
Test the p-Quotient Algorithm

Covers:
1. Orders, classes and derived lengths of G_n and H_n
2. Stabilization and order caps
3. p-covering groups, relation rank and the Schur multiplier
4. The G_n / <x^3> = H_n comparison
5. Emitted pc presentations with provenance
"""

import pytest

from services import fpgroup, pcgroup, pquotient
from services.errors import ResourceLimitError
from services.fpgroup import Presentation, Word, commutator


def _floor_log2(k: int) -> int:
    return k.bit_length() - 1


def _check_gn(n: int):
    result = pquotient.p_quotient(fpgroup.gn_presentation(n), 2 * n + 3)
    group = result.quotient
    print(f"   • G_{n}: order 3^{group.num_gens}, p-class {result.p_class}, orders {result.orders}")
    assert result.stabilized
    assert group.order == 3 ** (3 * n + 2)
    assert group.nilpotency_class() == 2 * n + 1
    assert group.derived_length() == _floor_log2(3 * n + 3)
    assert group.is_consistent()
    assert result.relators_vanish()
    assert pcgroup.generates(group, result.epimorphism)


def test_gn_small():
    """Test G_1 and G_2"""
    print("\n" + "="*70)
    print("TEST 1: G_1 and G_2")
    print("="*70)

    _check_gn(1)
    _check_gn(2)

    print("\n✅ Test Passed: orders 3^5 and 3^8")


@pytest.mark.slow
@pytest.mark.parametrize("n", [3, 4])
def test_gn_large(n):
    """Test G_3 and G_4"""
    _check_gn(n)


def test_hn_orders():
    """Test |H_n| = 3^(3n+1)"""
    print("\n" + "="*70)
    print("TEST 2: H_n")
    print("="*70)

    for n in (1, 2):
        result = pquotient.p_quotient(fpgroup.hn_presentation(n), 2 * n + 3)
        assert result.stabilized
        assert result.quotient.order == 3 ** (3 * n + 1)
        assert result.relators_vanish()

    print("\n✅ Test Passed: H_1, H_2")


def test_elementary_and_free_cyclic():
    """Test a finite abelian quotient and an infinite cyclic group"""
    x, y = Word.gen(0), Word.gen(1)
    ea = Presentation(2, (x ** 3, y ** 3, commutator(x, y)))
    result = pquotient.p_quotient(ea, 4)
    assert result.stabilized
    assert result.quotient.order == 9
    assert result.p_class == 1

    free = pquotient.p_quotient(Presentation(1), 3)
    assert not free.stabilized
    assert free.p_class == 3
    assert free.orders == (3, 9, 27)
    assert pcgroup.isomorphic(free.quotient, pcgroup.cyclic(3))

    trivial = pquotient.p_quotient(Presentation(1, (x,)), 3)
    assert trivial.stabilized
    assert trivial.quotient.order == 1


def test_limits():
    """Test argument checks and the order cap"""
    with pytest.raises(ValueError):
        pquotient.p_quotient(fpgroup.gn_presentation(1), 0)
    with pytest.raises(ResourceLimitError):
        pquotient.p_quotient(fpgroup.gn_presentation(2), 7, order_cap=3**5)


def test_image_of_words():
    """Test the epimorphism on words"""
    result = pquotient.p_quotient(fpgroup.gn_presentation(1), 5)
    group = result.quotient
    x, y = result.epimorphism
    assert result.image(fpgroup.x_word()) == x
    assert result.image(Word.gen(0, 3)) == group.power(x, 3)
    assert any(result.image(Word.gen(0, 3)))
    assert group.element_order(x) == 9
    assert not any(result.image(fpgroup.schur_sigma_relator(fpgroup.t_word())))


def test_p_cover_and_relation_rank():
    """Test multiplicator ranks and the Schur multiplier"""
    print("\n" + "="*70)
    print("TEST 3: p-Covering Groups")
    print("="*70)

    ea = pcgroup.elementary_abelian(2)
    cover = pquotient.p_cover(ea)
    assert cover.rank == 3
    assert cover.cover.order == 3**5
    assert cover.cover.is_consistent()
    assert len(cover.nucleus) == 3

    assert pquotient.relation_rank(pcgroup.cyclic(1)) == 1
    assert pquotient.schur_multiplier_rank(pcgroup.cyclic(1)) == 0
    assert pquotient.schur_multiplier_rank(ea) == 1

    q1_rank = pquotient.relation_rank(pcgroup.q1())
    q2_rank = pquotient.relation_rank(pcgroup.q2())
    print(f"   • relation rank Q1 = {q1_rank}, Q2 = {q2_rank}")
    assert q1_rank == 2
    assert q2_rank == 3
    assert pquotient.schur_multiplier_rank(pcgroup.q1()) == 0
    assert pquotient.schur_multiplier_rank(pcgroup.q2()) == 1

    print("\n✅ Test Passed: Q2 has a nontrivial Schur multiplier")


def test_lemma1_small():
    """Test <x^3> is central of order 3 in G_1, G_2 with quotient H_n"""
    print("\n" + "="*70)
    print("TEST 4: G_n / <x^3> = H_n")
    print("="*70)

    for n in (1, 2):
        check = pquotient.lemma1_check(n)
        print(f"   • n={n}: {check}")
        assert check.kernel_order == 3
        assert check.kernel_central
        assert check.quotient_matches
        assert check.gn_order == 3 * check.hn_order
        assert check.passed

    print("\n✅ Test Passed: Central extension of order 3")


@pytest.mark.slow
@pytest.mark.parametrize("n", [3, 4])
def test_lemma1_large(n):
    assert pquotient.lemma1_check(n).passed


def test_format_with_provenance():
    """Test emitted pc text carries the input presentation"""
    result = pquotient.p_quotient(fpgroup.gn_presentation(1), 5)
    text = result.format()
    print(text)
    lines = text.splitlines()
    assert lines[0] == "# computed by p-quotient from presentation:"
    assert "#   gens: 2" in lines
    assert "# p-class 3, stabilized true" in lines
    assert "pc p=3 n=5" in lines
    assert pcgroup.isomorphic(pcgroup.parse_pc(text), pcgroup.q1())
