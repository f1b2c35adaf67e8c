"""
Test Class Groups of Imaginary Quadratic Fields

Covers:
1. Fundamental discriminants and reduced forms
2. Composition and the class group laws
3. Group structure and 3-ranks
4. The class number sweep and the [3,3] scan
5. The listed discriminants and the CSV output
"""

import csv
import random

import pytest
from hypothesis import given, settings, strategies as st

from services import classgroup
from services.abelian import AbelianInvariants
from services.classgroup import Discriminant, QuadForm
from services.errors import DiscriminantError, ResourceLimitError

THREE_THREE = AbelianInvariants((3, 3))


def test_fundamental_discriminants():
    """Test fundamental discriminant recognition"""
    print("\n" + "="*70)
    print("TEST 1: Fundamental Discriminants")
    print("="*70)

    for d in (-3, -4, -7, -8, -23, -84, -4027):
        assert classgroup.is_fundamental(d), d
    for d in (-5, -12, -16, -27, 0, 1):
        assert not classgroup.is_fundamental(d), d

    assert int(Discriminant(-23)) == -23
    with pytest.raises(DiscriminantError):
        Discriminant(5)
    with pytest.raises(DiscriminantError):
        Discriminant(-12)
    with pytest.raises(ResourceLimitError):
        Discriminant(-10**8 - 3)

    print("\n✅ Test Passed: Discriminants classified")


def test_reduced_forms():
    """Test reduced forms for small discriminants"""
    assert classgroup.reduced_forms(-3) == [QuadForm(1, 1, 1)]
    assert classgroup.reduced_forms(-4) == [QuadForm(1, 0, 1)]
    assert sorted(classgroup.reduced_forms(-23)) == [QuadForm(1, 1, 6), QuadForm(2, -1, 3), QuadForm(2, 1, 3)]
    assert len(classgroup.reduced_forms(-84)) == 4
    assert all(f.is_reduced and f.discriminant == -4027 for f in classgroup.reduced_forms(-4027))

    assert QuadForm.principal(-23) == QuadForm(1, 1, 6)
    assert QuadForm.principal(-84) == QuadForm(1, 0, 21)
    assert QuadForm(6, 1, 1).reduce() == QuadForm(1, 1, 6)
    assert QuadForm(3, 1, 2).reduce() == QuadForm(2, -1, 3)


def test_composition():
    """Test products, squares and orders"""
    print("\n" + "="*70)
    print("TEST 2: Composition")
    print("="*70)

    f = QuadForm(2, 1, 3)
    assert f.compose(f) == QuadForm(2, -1, 3)
    assert f * f.inverse() == QuadForm.principal(-23)
    assert f.power(3) == QuadForm.principal(-23)
    assert f.power(-1) == f.inverse()
    assert classgroup.form_order(f) == 3

    # non-principal forms of discriminant -84 all square to the identity
    for g in classgroup.reduced_forms(-84):
        assert g.compose(g) == QuadForm.principal(-84)

    with pytest.raises(DiscriminantError):
        f.compose(QuadForm(1, 0, 1))

    print("\n✅ Test Passed: Gauss composition")


LAW_DISCRIMINANTS = (-23, -56, -84, -3299, -4027)


@st.composite
def form_triples(draw):
    d = draw(st.sampled_from(LAW_DISCRIMINANTS))
    forms = classgroup.reduced_forms(d)
    return d, draw(st.sampled_from(forms)), draw(st.sampled_from(forms)), draw(st.sampled_from(forms))


@settings(max_examples=300, deadline=None)
@given(form_triples())
def test_class_group_laws(triple):
    """Test associativity, commutativity, identity and inverses"""
    d, f, g, k = triple
    e = QuadForm.principal(d)
    assert (f * g) * k == f * (g * k)
    assert f * g == g * f
    assert f * e == f
    assert f * f.inverse() == e
    assert (f * g).is_reduced


def _check_laws_sampled(d, rng, triples=1000):
    forms = classgroup.reduced_forms(d)
    e = QuadForm.principal(d)
    for _ in range(triples):
        f, g, k = (rng.choice(forms) for _ in range(3))
        assert (f * g) * k == f * (g * k), (d, f, g, k)
        assert f * g == g * f
        assert f * e == f
        assert f * f.inverse() == e


def test_class_group_laws_sampled():
    """Test the group laws on 10^3 seeded triples per discriminant"""
    rng = random.Random(20060216)
    for d in LAW_DISCRIMINANTS:
        _check_laws_sampled(d, rng)


@pytest.mark.slow
def test_class_group_laws_on_scanned_fields():
    """Test the group laws on 10^3 triples for every scanned field with h <= 50"""
    rng = random.Random(20060216)
    rows = classgroup.scan(-50000, -1, THREE_THREE, threads=4)
    checked = [row.d for row in rows if row.h <= 50]
    print(f"   • {len(checked)} fields with h <= 50")
    assert checked
    for d in checked:
        _check_laws_sampled(d, rng)


def test_group_structure():
    """Test invariants of small class groups"""
    print("\n" + "="*70)
    print("TEST 3: Group Structure")
    print("="*70)

    cases = {
        -3: AbelianInvariants(),
        -4: AbelianInvariants(),
        -23: AbelianInvariants((3,)),
        -56: AbelianInvariants((4,)),
        -84: AbelianInvariants((2, 2)),
        -4027: THREE_THREE,
    }
    for d, expected in cases.items():
        structure = classgroup.group_structure(d)
        print(f"   • Cl({d}) = {structure.invariants}, h = {structure.h}")
        assert structure.invariants == expected
        assert structure.h == expected.order

    assert classgroup.sylow3(classgroup.group_structure(-84)) == AbelianInvariants()
    assert classgroup.three_rank_by_torsion(-4027) == 2
    assert classgroup.three_rank_by_torsion(-23) == 1
    assert classgroup.three_rank_by_torsion(-4) == 0

    print("\n✅ Test Passed: Cl(-4027) = [3,3]")


def test_listed_discriminants_have_33():
    """Test every listed field has 3-class group [3,3]"""
    for d in classgroup.G1_DISCRIMINANTS + classgroup.HIGHER_DISCRIMINANTS:
        assert classgroup.sylow3(classgroup.group_structure(d)) == THREE_THREE, d


def test_class_number_sweep():
    """Test the sweep agrees with reduced form counts"""
    numbers = classgroup.class_numbers(-100, -1)
    expected = {-3: 1, -4: 1, -23: 3, -47: 5, -71: 7, -84: 4, -95: 8}
    for d, h in expected.items():
        assert numbers[d] == h
    for d, h in numbers.items():
        assert classgroup.is_fundamental(d)
        assert h == len(classgroup.reduced_forms(d))
    assert -12 not in numbers

    with pytest.raises(ResourceLimitError):
        classgroup.class_numbers(-10**8, -1)


def test_scan_small_range(tmp_path):
    """Test the [3,3] scan around the smallest listed fields and its CSV"""
    print("\n" + "="*70)
    print("TEST 4: Scan")
    print("="*70)

    rows = classgroup.scan(-4100, -3000, THREE_THREE)
    found = [row.d for row in rows]
    print(f"   • Cl_3 = [3,3] in [-4100, -3000]: {found}")
    assert -4027 in found
    assert -3896 in found
    assert found == sorted(found)
    assert all(row.sylow3 == THREE_THREE for row in rows)

    by_d = {row.d: row for row in rows}
    assert by_d[-4027].in_g1_list
    assert by_d[-3896].in_higher_list
    assert not by_d[-3896].in_g1_list

    missing = classgroup.list_membership(rows, [-4027, -3896, -8751])
    assert missing == [-8751]

    path = tmp_path / "scan.csv"
    classgroup.write_scan_csv(rows, str(path))
    with open(path, newline="") as handle:
        table = list(csv.reader(handle))
    assert tuple(table[0]) == classgroup.CSV_COLUMNS
    assert len(table) == len(rows) + 1
    line = next(r for r in table[1:] if r[0] == "-4027")
    assert line[1:] == ["9", "[3, 3]", "[3, 3]", "true", "false"]

    print("\n✅ Test Passed: -3896 and -4027 found")


def test_scan_parallel_matches_serial():
    """Test the process pool returns the same rows"""
    serial = classgroup.scan(-4100, -3800, THREE_THREE, threads=1)
    parallel = classgroup.scan(-4100, -3800, THREE_THREE, threads=2)
    assert serial == parallel


@pytest.mark.slow
def test_scan_full_range_covers_lists():
    """Test every listed discriminant appears in the scan down to -50000"""
    rows = classgroup.scan(-50000, -1, THREE_THREE, threads=4)
    listed = classgroup.G1_DISCRIMINANTS + classgroup.HIGHER_DISCRIMINANTS
    assert classgroup.list_membership(rows, listed) == []
    print(f"   • {len(rows)} fields with Cl_3 = [3,3]")
