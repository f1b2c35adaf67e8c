"""
Class Groups of Imaginary Quadratic Fields

Classes are reduced positive definite binary quadratic forms (a, b, c)
with b^2 - 4ac = d; composition is Gauss composition followed by
reduction. Group structure comes from a greedy generating set and the
Smith form of its relation lattice.

Usage:
    from services import classgroup

    structure = classgroup.group_structure(-4027)
    print(structure.h, structure.invariants, classgroup.sylow3(structure))

    rows = classgroup.scan(-50000, -1, AbelianInvariants((3, 3)), threads=4)
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import structlog
from cachetools import LRUCache, cached
from sympy import factorint
from sympy.core.intfunc import igcdex

from services import metrics
from services.abelian import AbelianInvariants, smith_invariants
from services.errors import ConsistencyError, DiscriminantError, ResourceLimitError
from services.tracing import traced

logger = structlog.get_logger(__name__)

DISCRIMINANT_CAP = 10**7

# Cl_3 = [3,3] fields whose 3-class tower group is G_1
G1_DISCRIMINANTS = (
    -4027, -8751, -19651, -21224, -22711, -24904, -26139, -28031, -28759, -34088, -36807,
    -40299, -40692, -41015, -42423, -43192, -44004, -45835, -46587, -48052, -49128, -49812,
)

# fields whose index-3 subgroup data match G_n for n >= 2
HIGHER_DISCRIMINANTS = (
    -3896, -6583, -23428, -25447, -27355, -27991, -36276, -37219, -37540, -39819,
    -41063, -43827, -46551,
)


def is_fundamental(d: int) -> bool:
    """d = 1 mod 4 squarefree, or d = 4m with m = 2, 3 mod 4 squarefree"""
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return _squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(m)
    return False


def _squarefree(n: int) -> bool:
    return all(e == 1 for e in factorint(abs(n)).values())


@dataclass(frozen=True)
class Discriminant:
    d: int

    def __post_init__(self):
        if self.d >= 0:
            raise DiscriminantError(f"discriminant {self.d} must be negative")
        if abs(self.d) > DISCRIMINANT_CAP:
            raise ResourceLimitError("discriminant size", DISCRIMINANT_CAP, abs(self.d))
        if not is_fundamental(self.d):
            raise DiscriminantError(f"{self.d} is not a fundamental discriminant")

    def __int__(self) -> int:
        return self.d


def _solve_linmod(a: int, b: int, m: int) -> tuple[int, int]:
    # ax = b (mod m); solutions are u + v*k
    x, _, g = igcdex(a, m)
    if b % g:
        raise ValueError("no solution")
    return (b // g) * x % m, m // g


@dataclass(frozen=True, order=True)
class QuadForm:
    """Binary quadratic form a x^2 + b xy + c y^2"""

    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not abs(b) <= a <= c:
            return False
        if abs(b) == a or a == c:
            return b >= 0
        return True

    @classmethod
    def principal(cls, d: int) -> "QuadForm":
        k = d % 2
        return cls(1, k, (k * k - d) // 4)

    def normalize(self) -> "QuadForm":
        a, b, c = self.a, self.b, self.c
        r = (a - b) // (2 * a)
        return QuadForm(a, b + 2 * r * a, a * r * r + b * r + c)

    def reduce(self) -> "QuadForm":
        f = self.normalize()
        a, b, c = f.a, f.b, f.c
        while not (a < c or (a == c and b >= 0)):
            s = (c + b) // (2 * c)
            a, b, c = c, -b + 2 * s * c, c * s * s - b * s + a
        return QuadForm(a, b, c)

    def inverse(self) -> "QuadForm":
        return QuadForm(self.a, -self.b, self.c).reduce()

    def compose(self, other: "QuadForm") -> "QuadForm":
        """Reduced representative of the product class"""
        if self.discriminant != other.discriminant:
            raise DiscriminantError(f"cannot compose forms of discriminants {self.discriminant} and {other.discriminant}")
        a, b, c = self.a, self.b, self.c
        a2, b2 = other.a, other.b
        g = (b + b2) // 2
        h = -(b - b2) // 2
        w = math.gcd(math.gcd(a, a2), g)
        s, t, u = a // w, a2 // w, g // w
        mu, nu = _solve_linmod(t * u, h * u + s * c, s * t)
        lam = _solve_linmod(t * nu, h - t * mu, s)[0]
        k = mu + nu * lam
        l = (k * t - h) // s
        m = (t * u * k - h * u - c * s) // (s * t)
        return QuadForm(s * t, w * u - (k * t + l * s), k * l - w * m).reduce()

    __mul__ = compose

    def power(self, exponent: int) -> "QuadForm":
        base = self if exponent >= 0 else self.inverse()
        exponent = abs(exponent)
        result = QuadForm.principal(self.discriminant)
        while exponent:
            if exponent & 1:
                result = result.compose(base)
            exponent >>= 1
            if exponent:
                base = base.compose(base)
        return result

    def __str__(self) -> str:
        return f"({self.a},{self.b},{self.c})"


def reduced_forms(d: int) -> list[QuadForm]:
    """All reduced forms of discriminant d, one per class"""
    Discriminant(d)
    forms = []
    a = 1
    while 3 * a * a <= -d:
        for b in range(-a + 1, a + 1):
            if (b - d) % 2:
                continue
            num = b * b - d
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            forms.append(QuadForm(a, b, c))
        a += 1
    return forms


def form_order(f: QuadForm, h: Optional[int] = None) -> int:
    identity = QuadForm.principal(f.discriminant)
    current, k = f, 1
    while current != identity:
        current = current.compose(f)
        k += 1
        if h is not None and k > h:
            raise ConsistencyError(f"form {f} has order exceeding h = {h}")
    return k


@dataclass(frozen=True)
class ClassGroupStructure:
    d: int
    h: int
    invariants: AbelianInvariants
    generators: tuple[QuadForm, ...] = ()


@cached(LRUCache(maxsize=256))
def group_structure(d: int) -> ClassGroupStructure:
    """
    Invariants of Cl(d)

    Generators are added largest order first; each new generator g_i
    contributes the relation g_i^e = (word in earlier generators) with e
    minimal, and the relation lattice goes through Smith form.
    """
    forms = reduced_forms(d)
    h = len(forms)
    identity = QuadForm.principal(d)
    orders = {f: form_order(f, h) for f in forms}
    candidates = sorted(forms, key=lambda f: (-orders[f], f))

    elements: dict[QuadForm, tuple[int, ...]] = {identity: ()}
    gens: list[QuadForm] = []
    relations: list[list[int]] = []
    for f in candidates:
        if f in elements:
            continue
        i = len(gens)
        gens.append(f)
        base = {g: v + (0,) for g, v in elements.items()}
        new = {}
        power, e = f, 1
        while power not in base:
            for g, v in base.items():
                new[g.compose(power)] = v[:i] + (e,)
            power = power.compose(f)
            e += 1
        relations.append([-x for x in base[power][:i]] + [e])
        elements = {**base, **new}

    if len(elements) != h:
        raise ConsistencyError(f"generated {len(elements)} classes but h({d}) = {h}")
    width = len(gens)
    rows = [row + [0] * (width - len(row)) for row in relations]
    invariants = smith_invariants(rows, width) if width else AbelianInvariants()
    if invariants.order != h:
        raise ConsistencyError(f"invariants {invariants} do not multiply to h({d}) = {h}")
    return ClassGroupStructure(d, h, invariants, tuple(gens))


def sylow3(structure) -> AbelianInvariants:
    invariants = structure.invariants if isinstance(structure, ClassGroupStructure) else structure
    return invariants.p_part(3)


def three_rank_by_torsion(d: int) -> int:
    """log_3 of the number of classes x with x^3 principal"""
    identity = QuadForm.principal(d)
    count = sum(1 for f in reduced_forms(d) if f.power(3) == identity)
    rank = 0
    while count > 1:
        if count % 3:
            raise ConsistencyError(f"3-torsion of Cl({d}) has order {count}")
        count //= 3
        rank += 1
    return rank


def class_numbers(dmin: int, dmax: int) -> dict[int, int]:
    """
    h(d) for every fundamental d in [dmin, dmax], from one sweep over
    reduced forms of all discriminants in range
    """
    if dmax >= 0:
        dmax = -1
    if abs(dmin) > DISCRIMINANT_CAP:
        raise ResourceLimitError("discriminant size", DISCRIMINANT_CAP, abs(dmin))
    limit = -dmin
    counts: dict[int, int] = {}
    a = 1
    while 3 * a * a <= limit:
        for b in range(-a + 1, a + 1):
            # c >= a with b^2 - 4ac >= dmin
            c = a
            while True:
                d = b * b - 4 * a * c
                if d < dmin:
                    break
                if d <= dmax and not (c == a and b < 0):
                    counts[d] = counts.get(d, 0) + 1
                c += 1
        a += 1
    return {d: h for d, h in sorted(counts.items()) if is_fundamental(d)}


def _v3(n: int) -> int:
    v = 0
    while n % 3 == 0:
        n //= 3
        v += 1
    return v


@dataclass(frozen=True)
class ScanRow:
    d: int
    h: int
    invariants: AbelianInvariants
    sylow3: AbelianInvariants

    @property
    def in_g1_list(self) -> bool:
        return self.d in G1_DISCRIMINANTS

    @property
    def in_higher_list(self) -> bool:
        return self.d in HIGHER_DISCRIMINANTS


def _scan_row(d: int) -> ScanRow:
    structure = group_structure(d)
    sylow = sylow3(structure)
    torsion_rank = three_rank_by_torsion(d)
    if torsion_rank != sylow.rank(3):
        raise ConsistencyError(f"3-rank of Cl({d}): structure {sylow.rank(3)}, torsion {torsion_rank}")
    return ScanRow(d, structure.h, structure.invariants, sylow)


@traced("classgroup")
def scan(dmin: int, dmax: int, target: AbelianInvariants, threads: int = 1) -> list[ScanRow]:
    """
    Fundamental discriminants in [dmin, dmax] whose 3-Sylow equals target,
    in increasing order of d
    """
    with metrics.timed("classgroup", "class_number_sweep"):
        numbers = class_numbers(dmin, dmax)
    wanted = _v3(target.order)
    candidates = [d for d, h in numbers.items() if _v3(h) == wanted]
    logger.info("scan_candidates", fundamental=len(numbers), candidates=len(candidates))
    metrics.record_counter("classgroup", "structures_computed", len(candidates))

    with metrics.timed("classgroup", "structures"):
        if threads > 1 and len(candidates) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(_scan_row, candidates, chunksize=16))
        else:
            rows = [_scan_row(d) for d in candidates]
    matches = [row for row in rows if row.sylow3 == target]
    return sorted(matches, key=lambda row: row.d)


CSV_COLUMNS = ("d", "h", "invariants", "sylow3", "in_g1_list", "in_higher_list")


def write_scan_csv(rows: Iterable[ScanRow], path: str):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row.d,
                row.h,
                str(row.invariants),
                str(row.sylow3),
                str(row.in_g1_list).lower(),
                str(row.in_higher_list).lower(),
            ])


def list_membership(rows: Sequence[ScanRow], listed: Sequence[int]) -> list[int]:
    """Listed discriminants missing from the scan result"""
    found = {row.d for row in rows}
    return [d for d in listed if d not in found]
