"""
Abelian invariants shared by the group and class-group modules.

Invariants are kept as prime-power cyclic orders, ascending, plus a free
rank. Integer relation matrices go through sympy's Smith normal form.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

from sympy import ZZ, factorint
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import invariant_factors


@dataclass(frozen=True, order=True)
class AbelianInvariants:
    """Prime-power decomposition of a finitely generated abelian group"""

    orders: tuple[int, ...] = ()
    free_rank: int = 0

    @classmethod
    def from_orders(cls, orders: Iterable[int], free_rank: int = 0) -> "AbelianInvariants":
        """Split arbitrary cyclic orders into prime powers and sort"""
        parts = []
        for order in orders:
            order = abs(int(order))
            if order == 0:
                free_rank += 1
                continue
            if order == 1:
                continue
            parts.extend(p**e for p, e in factorint(order).items())
        return cls(tuple(sorted(parts)), free_rank)

    @classmethod
    def parse(cls, text: str) -> "AbelianInvariants":
        """Parse '3,9' or '[3, 9]'"""
        cleaned = text.strip().strip("[]").replace(" ", "")
        if not cleaned:
            return cls()
        return cls.from_orders(int(v) for v in cleaned.split(","))

    @property
    def order(self) -> int:
        """Group order, 0 when infinite"""
        if self.free_rank:
            return 0
        result = 1
        for order in self.orders:
            result *= order
        return result

    def p_part(self, p: int) -> "AbelianInvariants":
        """The p-primary component"""
        return AbelianInvariants(tuple(q for q in self.orders if q % p == 0))

    def rank(self, p: int) -> int:
        return sum(1 for q in self.orders if q % p == 0)

    def is_quotient_of(self, target: "AbelianInvariants") -> bool:
        """True iff target surjects onto self (finite groups)"""
        if self.free_rank > target.free_rank:
            return False
        primes = {_prime_of(q) for q in self.orders} | {_prime_of(q) for q in target.orders}
        for p in primes:
            mine = sorted((q for q in self.orders if q % p == 0), reverse=True)
            theirs = sorted((q for q in target.orders if q % p == 0), reverse=True)
            if len(mine) > len(theirs) + target.free_rank:
                return False
            if any(a > b for a, b in zip(mine, theirs)):
                return False
        return True

    def __str__(self) -> str:
        values = list(self.orders) + [0] * self.free_rank
        return "[" + ", ".join(str(v) for v in values) + "]"


def _prime_of(q: int) -> int:
    return next(iter(factorint(q)))


def smith_invariants(rows: Sequence[Sequence[int]], num_cols: int) -> AbelianInvariants:
    """
    Invariants of Z^num_cols modulo the row lattice

    Args:
        rows: Integer relation vectors, each of length num_cols
        num_cols: Number of generators

    Returns:
        AbelianInvariants of the quotient group
    """
    rows = [list(r) for r in rows if any(r)]
    if not rows:
        return AbelianInvariants(free_rank=num_cols)

    matrix = DomainMatrix([[ZZ(v) for v in row] for row in rows], (len(rows), num_cols), ZZ)
    factors = [abs(int(v)) for v in invariant_factors(matrix)]
    nonzero = [v for v in factors if v != 0]
    return AbelianInvariants.from_orders(nonzero, free_rank=num_cols - len(nonzero))
