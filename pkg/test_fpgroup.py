"""
Test Free-Group Words and Presentations

Covers:
1. Free reduction and sigma on words
2. The G_n, H_n, H and K presentations
3. Reidemeister-Schreier rewriting onto the index-3 subgroup K
4. Normal closure comparison through 3-quotients
5. The presentation text format
"""

import random

import pytest
from hypothesis import given, settings, strategies as st

from services import fpgroup
from services.abelian import AbelianInvariants
from services.errors import PresentationError
from services.fpgroup import Presentation, Word, free_reduce

X, Y = fpgroup.X, fpgroup.Y

syllables = st.lists(
    st.tuples(st.integers(0, 1), st.integers(-4, 4).filter(lambda e: e != 0)),
    max_size=12,
)
words = syllables.map(free_reduce)


def test_free_reduction_examples():
    """Test cancellation and merging"""
    print("\n" + "="*70)
    print("TEST 1: Free Reduction")
    print("="*70)

    assert free_reduce([(X, 1), (X, -1)]).is_identity
    assert free_reduce([(X, 1), (Y, 1), (Y, -1), (X, 1)]) == Word(((X, 2),))
    reduced = free_reduce([(Y, 3), (X, -3), (X, -3), (Y, 3)])
    assert reduced == Word(((Y, 3), (X, -6), (Y, 3)))
    assert reduced.length == 12

    with pytest.raises(PresentationError):
        Word(((X, 1), (X, 2)))

    print("\n✅ Test Passed: Words reduce to normal form")


@settings(max_examples=300, deadline=None)
@given(syllables, words, words)
def test_free_reduction_laws(letters, u, v):
    """Test idempotence, involution and reversal laws on random words"""
    w = free_reduce(letters)
    assert free_reduce(w.letters) == w
    assert w.length <= sum(abs(e) for _, e in letters)
    assert w.inverse().inverse() == w
    assert (u * v).inverse() == v.inverse() * u.inverse()
    assert (w * w.inverse()).is_identity


@settings(max_examples=300, deadline=None)
@given(words)
def test_sigma_laws(w):
    """Test sigma is an involution and r^-1 sigma(r) is sigma-antisymmetric"""
    assert fpgroup.apply_sigma(fpgroup.apply_sigma(w)) == w
    s = fpgroup.schur_sigma_relator(w)
    assert fpgroup.apply_sigma(s) == s.inverse()


def test_sigma_examples():
    """Test sigma and Schur-sigma relators on named words"""
    print("\n" + "="*70)
    print("TEST 2: Sigma")
    print("="*70)

    x, y = fpgroup.x_word(), fpgroup.y_word()
    assert fpgroup.apply_sigma(x) == Word(((X, -1),))
    assert fpgroup.apply_sigma(x * y) == Word(((X, -1), (Y, -1)))
    assert fpgroup.apply_sigma(fpgroup.r_word(1)) == Word(((X, -3), (Y, 3)))
    assert fpgroup.schur_sigma_relator(x) == Word(((X, -2),))
    assert fpgroup.schur_sigma_relator(fpgroup.r_word(1)) == Word(((Y, 3), (X, -6), (Y, 3)))

    expected_t = Word((
        (Y, -1), (X, 1), (Y, -1), (X, -1), (Y, -2), (X, -1), (Y, -1), (X, 1), (Y, -1),
    ))
    assert fpgroup.schur_sigma_relator(fpgroup.t_word()) == expected_t

    with pytest.raises(PresentationError):
        fpgroup.apply_sigma(Word.gen(2))

    print("\n✅ Test Passed: Sigma relators match hand reduction")


def test_presentations():
    """Test the G_n, H_n and H relator sets"""
    print("\n" + "="*70)
    print("TEST 3: Presentations")
    print("="*70)

    g1 = fpgroup.gn_presentation(1)
    t_relator = fpgroup.schur_sigma_relator(fpgroup.t_word())
    assert g1.relators == (Word(((Y, 3), (X, -6), (Y, 3))), t_relator)
    assert g1.names == ("x", "y")

    h2 = fpgroup.hn_presentation(2)
    assert h2.relators == (Word(((X, 3),)), Word(((Y, 9),)), t_relator)
    assert fpgroup.h_presentation().relators == (Word(((X, 3),)), t_relator)

    g3 = fpgroup.gn_presentation(3)
    assert g3.relators[0] == Word(((Y, 27), (X, -6), (Y, 27)))

    for bad in (0, -1):
        with pytest.raises(PresentationError):
            fpgroup.gn_presentation(bad)
        with pytest.raises(PresentationError):
            fpgroup.hn_presentation(bad)

    print("\n✅ Test Passed: Relators as stated")


def test_abelianization_of_gn():
    """Test G_n^ab has 3-part [3,3] for every n"""
    print("\n" + "="*70)
    print("TEST 4: Abelianization of G_n")
    print("="*70)

    for n in range(1, 6):
        p = fpgroup.gn_presentation(n)
        full = fpgroup.abelian_invariants(p)
        three = fpgroup.abelian_invariants(p, prime=3)
        print(f"   • G_{n}: {full}, 3-part {three}")
        assert full == AbelianInvariants((2, 2, 3, 3))
        assert three == AbelianInvariants((3, 3))

    assert fpgroup.abelian_invariants(fpgroup.hn_presentation(2), prime=3) == AbelianInvariants((3, 3))

    print("\n✅ Test Passed: [3,3] for all n")


def test_rewrite_index3_gives_k():
    """Test Reidemeister-Schreier rewriting of H onto K"""
    print("\n" + "="*70)
    print("TEST 5: Reidemeister-Schreier Rewriting")
    print("="*70)

    tv = fpgroup.index3_transversal()
    schreier = tv.schreier_generators()
    y_generators = [word for _, gen, word in schreier if gen == Y]
    assert len(y_generators) == 3
    assert all(w.exponent_sums(2)[Y] == 1 and tv.coset_of(w) == 0 for w in y_generators)
    assert all(tv.coset_of(fpgroup.z_word(i)) == 0 for i in range(3))

    k = fpgroup.rewrite_index3(fpgroup.h_presentation(), tv)
    print(fpgroup.format_presentation(k))

    assert k.num_gens == 3
    assert 1 <= len(k.relators) <= 3
    assert fpgroup.abelian_invariants(k) == fpgroup.abelian_invariants(fpgroup.k_presentation())
    assert fpgroup.abelian_invariants(k) == AbelianInvariants((2, 3, 3, 3))

    print("\n✅ Test Passed: Rewritten presentation abelianizes like K")


def test_rewrite_edge_cases():
    """Test identity transversal and ill-defined coset actions"""
    h = fpgroup.h_presentation()
    assert fpgroup.rewrite_index3(h, fpgroup.trivial_transversal(2)) is h

    # y^2 does not lie in the kernel of x, y -> 1 mod 3
    bad = Presentation(2, (Word.gen(Y, 2),))
    with pytest.raises(PresentationError):
        fpgroup.rewrite_index3(bad, fpgroup.index3_transversal())


def test_k_relator_forms_agree():
    """Test the two displayed forms of the K relators are rotations of each other"""
    k = fpgroup.k_presentation()
    kc = fpgroup.k_commutator_presentation()
    assert fpgroup.canonical_relators(k) == fpgroup.canonical_relators(kc)


def test_same_normal_closure_small():
    """Test reflexivity and a separating pair"""
    print("\n" + "="*70)
    print("TEST 6: Normal Closure Comparison")
    print("="*70)

    h1 = fpgroup.hn_presentation(1)
    assert fpgroup.same_normal_closure(h1, h1, class_bound=3)

    order3 = Presentation(1, (Word.gen(0, 3),))
    order9 = Presentation(1, (Word.gen(0, 9),))
    assert not fpgroup.same_normal_closure(order3, order9, class_bound=2)

    with pytest.raises(PresentationError):
        fpgroup.same_normal_closure(order3, h1)

    print("\n✅ Test Passed: Normal closures compared")


@pytest.mark.slow
def test_same_normal_closure_k():
    """Test both K relator forms define the same 3-quotient up to class 4"""
    assert fpgroup.same_normal_closure(
        fpgroup.k_presentation(), fpgroup.k_commutator_presentation(), class_bound=4
    )


def test_presentation_text_format():
    """Test parsing and formatting of presentation files"""
    print("\n" + "="*70)
    print("TEST 7: Presentation Text Format")
    print("="*70)

    text = """
    # H_2
    gens: 2
    x^3
    y ^ 9
    y^-1 x y^-1 x^-1 y^-2 x^-1 y^-1 x y^-1
    """
    p = fpgroup.parse_presentation(text)
    assert p == fpgroup.hn_presentation(2)
    assert fpgroup.parse_presentation(fpgroup.format_presentation(p)) == p

    named = fpgroup.parse_presentation("gens: 3 a b c\na^3 b^-1\nc b c^-1\n")
    assert named.names == ("a", "b", "c")
    assert fpgroup.format_word(named.relators[0], named.names) == "a^3 b^-1"

    for bad in ("x^3\n", "gens: two\n", "gens: 2\nq^3\n", "gens: 2 a\n"):
        with pytest.raises(PresentationError):
            fpgroup.parse_presentation(bad)

    print("\n✅ Test Passed: Text format parsed")


def test_random_words_are_reduced():
    """Test reduction and inversion laws on 10^4 seeded random words"""
    rng = random.Random(20060216)
    previous = Word()
    for _ in range(10_000):
        w = fpgroup.random_word(rng, 2)
        assert free_reduce(w.letters) == w
        assert w.max_generator <= 1
        assert w.inverse().inverse() == w
        assert (w * w.inverse()).is_identity
        assert (previous * w).inverse() == w.inverse() * previous.inverse()
        previous = w
