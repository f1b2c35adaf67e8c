"""
Truncated 3-adic Matrices and the Sylow Subgroup of SL_2(Z_3)

Everything happens in SL_2(Z/3^M). The representation rho sends
x -> (0 -1; 1 -1) and y -> alpha (0 1/2; 1 -1) with alpha^2 = -2,
alpha = 1 (mod 3); sigma acts as conjugation by (-1 1; 0 1).

Subgroups are enumerated by breadth-first closure over 4-tuples
(a, b, c, d) in row-major order. Subgroup equality statements hold for
images in SL_2(Z/3^M).

Usage:
    from services import sl2

    P = sl2.bfs_enumerate(sl2.MatGroup((sl2.rho("x", 3), sl2.rho("y", 3)), 3))
    assert P.order == sl2.sylow_order(3)
    for record in sl2.series_formula_check(4):
        print(record.name, record.passed)
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import structlog
from cachetools import LRUCache, cached
from sympy.ntheory import sqrt_mod

from models.report_model import AssertionRecord
from services import fpgroup, metrics
from services.config import get_settings
from services.errors import PrecisionError, ResourceLimitError
from services.pcgroup import rank_mod_p
from services.tracing import traced

logger = structlog.get_logger(__name__)

PRIME = 3

Key = tuple[int, int, int, int]
IDENTITY: Key = (1, 0, 0, 1)


@dataclass(frozen=True)
class Z3Trunc:
    """Residue modulo 3^precision"""

    value: int
    precision: int

    def __post_init__(self):
        if self.precision < 1:
            raise PrecisionError("precision must be at least 1")
        object.__setattr__(self, "value", self.value % self.modulus)

    @property
    def modulus(self) -> int:
        return PRIME ** self.precision

    def _coerce(self, other) -> int:
        if isinstance(other, Z3Trunc):
            if other.precision != self.precision:
                raise PrecisionError("precisions differ")
            return other.value
        return int(other)

    def __add__(self, other) -> "Z3Trunc":
        return Z3Trunc(self.value + self._coerce(other), self.precision)

    def __sub__(self, other) -> "Z3Trunc":
        return Z3Trunc(self.value - self._coerce(other), self.precision)

    def __mul__(self, other) -> "Z3Trunc":
        return Z3Trunc(self.value * self._coerce(other), self.precision)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self) -> "Z3Trunc":
        return Z3Trunc(-self.value, self.precision)

    @property
    def is_unit(self) -> bool:
        return self.value % PRIME != 0

    def inverse(self) -> "Z3Trunc":
        if not self.is_unit:
            raise ValueError(f"{self.value} is not a unit modulo 3^{self.precision}")
        return Z3Trunc(pow(self.value, -1, self.modulus), self.precision)

    def valuation(self) -> int:
        """3-adic valuation; precision when the residue is zero"""
        if self.value == 0:
            return self.precision
        v, x = 0, self.value
        while x % PRIME == 0:
            x //= PRIME
            v += 1
        return v


def sqrt_minus2(precision: int) -> Z3Trunc:
    """The square root of -2 congruent to 1 mod 3"""
    if precision < 1:
        raise PrecisionError("precision must be at least 1")
    modulus = PRIME ** precision
    roots = sqrt_mod(-2 % modulus, modulus, all_roots=True)
    root = next(r for r in roots if r % PRIME == 1)
    return Z3Trunc(root, precision)


def _mul(x: Key, y: Key, q: int) -> Key:
    a, b, c, d = x
    e, f, g, h = y
    return ((a * e + b * g) % q, (a * f + b * h) % q, (c * e + d * g) % q, (c * f + d * h) % q)


def _inv(x: Key, q: int) -> Key:
    a, b, c, d = x
    det_inv = pow((a * d - b * c) % q, -1, q)
    return ((d * det_inv) % q, (-b * det_inv) % q, (-c * det_inv) % q, (a * det_inv) % q)


def _comm(x: Key, y: Key, q: int) -> Key:
    return _mul(_inv(_mul(y, x, q), q), _mul(x, y, q), q)


@dataclass(frozen=True)
class Mat2:
    """2x2 matrix over Z/3^precision with unit determinant"""

    key: Key
    precision: int

    @classmethod
    def of(cls, a: int, b: int, c: int, d: int, precision: int) -> "Mat2":
        q = PRIME ** precision
        return cls((a % q, b % q, c % q, d % q), precision)

    @classmethod
    def identity(cls, precision: int) -> "Mat2":
        return cls(IDENTITY, precision)

    @property
    def modulus(self) -> int:
        return PRIME ** self.precision

    @property
    def entries(self) -> tuple[Z3Trunc, ...]:
        return tuple(Z3Trunc(v, self.precision) for v in self.key)

    def det(self) -> Z3Trunc:
        a, b, c, d = self.key
        return Z3Trunc(a * d - b * c, self.precision)

    def _check(self, other: "Mat2"):
        if other.precision != self.precision:
            raise PrecisionError("matrix precisions differ")

    def __mul__(self, other: "Mat2") -> "Mat2":
        self._check(other)
        return Mat2(_mul(self.key, other.key, self.modulus), self.precision)

    def inverse(self) -> "Mat2":
        return Mat2(_inv(self.key, self.modulus), self.precision)

    def __pow__(self, exponent: int) -> "Mat2":
        base = self if exponent >= 0 else self.inverse()
        exponent = abs(exponent)
        result = Mat2.identity(self.precision)
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def commutator(self, other: "Mat2") -> "Mat2":
        self._check(other)
        return Mat2(_comm(self.key, other.key, self.modulus), self.precision)

    def conjugate(self, by: "Mat2") -> "Mat2":
        """by^-1 self by"""
        return by.inverse() * self * by

    @property
    def is_identity(self) -> bool:
        return self.key == IDENTITY

    def truncate(self, precision: int) -> "Mat2":
        if precision > self.precision:
            raise PrecisionError(f"cannot raise precision {self.precision} to {precision}")
        return Mat2.of(*self.key, precision)


@dataclass(frozen=True)
class MatGroup:
    """Subgroup of SL_2(Z/3^M) given by generators, optionally enumerated"""

    generators: tuple[Mat2, ...]
    precision: int
    elements: Optional[frozenset] = None

    @property
    def order(self) -> int:
        if self.elements is None:
            raise ValueError("group has not been enumerated")
        return len(self.elements)

    def __contains__(self, m: Mat2) -> bool:
        if self.elements is None:
            raise ValueError("group has not been enumerated")
        return m.key in self.elements


def _closure(gens: Sequence[Key], q: int, cap: int, start: Optional[Iterable[Key]] = None) -> set:
    """Right-multiplication closure; start must be a subgroup of <gens>"""
    seen = set(start) if start is not None else {IDENTITY}
    frontier = list(seen)
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = _mul(x, g, q)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        if len(seen) > cap:
            raise ResourceLimitError("matrix group order", cap, len(seen))
        frontier = nxt
    return seen


def bfs_enumerate(group: MatGroup, cap: Optional[int] = None) -> MatGroup:
    """Enumerate all elements of the generated group"""
    cap = cap or get_settings().bfs_cap
    q = PRIME ** group.precision
    with metrics.timed("sl2", "bfs_enumerate"):
        elements = _closure([g.key for g in group.generators], q, cap)
    return MatGroup(group.generators, group.precision, frozenset(elements))


def _subgroup(gens: Sequence[Key], precision: int, cap: int, start=None) -> MatGroup:
    q = PRIME ** precision
    elements = _closure(list(gens), q, cap, start)
    return MatGroup(tuple(Mat2(g, precision) for g in gens), precision, frozenset(elements))


def rho(gen: str, precision: int) -> Mat2:
    """Image of x or y"""
    if gen == "x":
        return Mat2.of(0, -1, 1, -1, precision)
    if gen == "y":
        alpha = sqrt_minus2(precision).value
        q = PRIME ** precision
        half = pow(2, -1, q)
        return Mat2.of(0, alpha * half, alpha, -alpha, precision)
    raise ValueError(f"unknown generator {gen!r}, expected 'x' or 'y'")


def rho_word(word: fpgroup.Word, precision: int) -> Mat2:
    images = (rho("x", precision), rho("y", precision))
    result = Mat2.identity(precision)
    for gen, exp in word:
        result = result * images[gen] ** exp
    return result


def rho_z(i: int, precision: int) -> Mat2:
    """Image of z_i = x^-i y x^(i-1)"""
    if i not in (0, 1, 2):
        raise ValueError("z index must be 0, 1 or 2")
    return rho_word(fpgroup.z_word(i), precision)


SIGMA_CONJUGATOR = (-1, 1, 0, 1)


def sigma_prime(m: Mat2) -> Mat2:
    """Conjugation by (-1 1; 0 1), an involution"""
    s = Mat2.of(*SIGMA_CONJUGATOR, m.precision)
    return s * m * s


def is_in_Nk(m: Mat2, k: int) -> bool:
    """True iff m = 1 mod 3^k, for 1 <= k < precision"""
    if not 1 <= k < m.precision:
        raise PrecisionError(f"N_{k} membership needs 1 <= k < precision {m.precision}")
    q = PRIME ** k
    a, b, c, d = m.key
    return (a - 1) % q == 0 and b % q == 0 and c % q == 0 and (d - 1) % q == 0


CONGRUENCES = ("a,d=1 (3^n)", "b,c=0 (3^n)", "a+d=2 (3^(n+2))", "a+c=1 (3^(n+1))", "a+b-c=1 (3^(n+2))")
# a+b reading of the fourth congruence; rho(y^3) itself fails it
PRINTED_FOURTH = "a+b=1 (3^(n+1))"


def _congruences(m: Mat2, n: int, printed: bool = False) -> tuple[bool, ...]:
    a, b, c, d = m.key
    q0, q1, q2 = PRIME ** n, PRIME ** (n + 1), PRIME ** (n + 2)
    fourth = a + (b if printed else c) - 1
    return (
        (a - 1) % q0 == 0 and (d - 1) % q0 == 0,
        b % q0 == 0 and c % q0 == 0,
        (a + d - 2) % q2 == 0,
        fourth % q1 == 0,
        (a + b - c - 1) % q2 == 0,
    )


def hn_kernel_membership(m: Mat2, n: int, printed: bool = False) -> bool:
    """
    The five congruences cutting out the kernel of P -> H_n

    The fourth congruence reads a+c = 1 (3^(n+1)) for this rho; printed=True
    uses a+b instead.
    """
    if m.precision < n + 2:
        raise PrecisionError(f"kernel membership for n={n} needs precision >= {n + 2}")
    return all(_congruences(m, n, printed))


def sylow_order(precision: int) -> int:
    if precision < 1:
        raise PrecisionError("precision must be at least 1")
    return PRIME ** (3 * precision - 2)


def nk_generators(k: int, precision: int) -> tuple[Mat2, ...]:
    """diag(1+3^k, (1+3^k)^-1) and the two elementary matrices at level k"""
    q = PRIME ** precision
    t = PRIME ** k
    return (
        Mat2.of(1 + t, 0, 0, pow(1 + t, -1, q), precision),
        Mat2.of(1, t, 0, 1, precision),
        Mat2.of(1, 0, t, 1, precision),
    )


@cached(LRUCache(maxsize=32))
def nk_elements(k: int, precision: int) -> frozenset:
    """All matrices = 1 mod 3^k with determinant 1, enumerated directly"""
    if k > precision:
        raise PrecisionError(f"N_{k} needs precision >= {k}")
    q = PRIME ** precision
    t = PRIME ** k
    steps = range(0, q, t)
    elements = set()
    for a0, b, c in itertools.product(steps, repeat=3):
        a = (1 + a0) % q
        d = ((1 + b * c) * pow(a, -1, q)) % q
        elements.add((a, b, c, d))
    return frozenset(elements)


@cached(LRUCache(maxsize=8))
def sylow_elements(precision: int) -> frozenset:
    """P = N_1 <rho(x)> enumerated as three cosets"""
    q = PRIME ** precision
    n1 = nk_elements(1, precision)
    x = rho("x", precision).key
    x2 = _mul(x, x, q)
    return frozenset(n1 | {_mul(m, x, q) for m in n1} | {_mul(m, x2, q) for m in n1})


def _p_conjugators(precision: int) -> tuple[Key, Key]:
    return rho("x", precision).key, rho("y", precision).key


def normal_closure_in_P(gens: Sequence[Mat2], precision: int, cap: Optional[int] = None) -> MatGroup:
    """Smallest subgroup containing gens and normalized by rho(x), rho(y)"""
    cap = cap or get_settings().bfs_cap
    q = PRIME ** precision
    conjugators = _p_conjugators(precision)
    gen_list = [g.key for g in gens if not g.is_identity]
    elements = _closure(gen_list, q, cap)
    changed = True
    while changed:
        changed = False
        for g in list(gen_list):
            for c in conjugators:
                h = _mul(_inv(c, q), _mul(g, c, q), q)
                if h not in elements:
                    gen_list.append(h)
                    elements = _closure(gen_list, q, cap, start=elements)
                    changed = True
    return MatGroup(tuple(Mat2(g, precision) for g in gen_list), precision, frozenset(elements))


def _p_group(precision: int) -> MatGroup:
    return MatGroup((rho("x", precision), rho("y", precision)), precision, sylow_elements(precision))


def lower_central_series(precision: int, cap: Optional[int] = None) -> list[MatGroup]:
    """gamma_1(P), gamma_2(P), ... down to the trivial group"""
    q = PRIME ** precision
    p = _p_group(precision)
    p_gens = [g.key for g in p.generators]
    series = [p]
    while len(series[-1].elements) > 1:
        comms = [_comm(g.key, s, q) for g in series[-1].generators for s in p_gens]
        series.append(normal_closure_in_P([Mat2(c, precision) for c in comms], precision, cap))
    return series


def derived_series(precision: int, cap: Optional[int] = None) -> list[MatGroup]:
    q = PRIME ** precision
    series = [_p_group(precision)]
    while len(series[-1].elements) > 1:
        gens = [g.key for g in series[-1].generators]
        comms = [_comm(gens[j], gens[i], q) for i in range(len(gens)) for j in range(i + 1, len(gens))]
        series.append(normal_closure_in_P([Mat2(c, precision) for c in comms], precision, cap))
    return series


def _z_power(i: int, exponent: int, precision: int) -> Mat2:
    return rho_z(i, precision) ** exponent


def _nk_times(k: int, extras: Sequence[Mat2], precision: int, cap: int) -> frozenset:
    """N_k <extras> as a set"""
    if k >= precision:
        base = frozenset({IDENTITY})
        base_gens: list[Key] = []
    else:
        base = nk_elements(k, precision)
        base_gens = [g.key for g in nk_generators(k, precision)]
    gens = base_gens + [e.key for e in extras]
    return frozenset(_closure(gens, PRIME ** precision, cap, start=base))


def gamma_formula(index: int, precision: int, cap: Optional[int] = None) -> frozenset:
    """
    Closed form for gamma_index(P): gamma_1 = P and for k >= 1
    gamma_2k = N_(k+1) <(z0 z1^-1)^e, (z1 z2^-1)^e>,
    gamma_(2k+1) = N_(k+1) <(z0 z1 z2)^e> with e = 3^(k-1)

    rho(z_i^(3^(k-1))) lies in N_k but not N_(k+1), so the extra
    generators are taken one layer above N_(k+1).
    """
    if index == 1:
        return sylow_elements(precision)
    cap = cap or get_settings().bfs_cap
    z = [rho_z(i, precision) for i in range(3)]
    k, odd = divmod(index, 2)
    e = PRIME ** (k - 1)
    if odd:
        extras = [(z[0] * z[1] * z[2]) ** e]
    else:
        extras = [(z[0] * z[1].inverse()) ** e, (z[1] * z[2].inverse()) ** e]
    return _nk_times(k + 1, extras, precision, cap)


def derived_to_gamma_index(i: int) -> int:
    """P^(2k) = gamma_((2^(2k+2)-1)/3), P^(2k+1) = gamma_((2^(2k+3)-2)/3)"""
    k, odd = divmod(i, 2)
    if odd:
        return (2 ** (2 * k + 3) - 2) // 3
    return (2 ** (2 * k + 2) - 1) // 3


@traced("sl2")
def series_formula_check(precision: int = 4, cap: Optional[int] = None) -> list[AssertionRecord]:
    """Compare BFS lower central and derived series with their closed forms"""
    records = []
    with metrics.timed("sl2", f"lower_central_M{precision}"):
        gammas = lower_central_series(precision, cap)
    for index, term in enumerate(gammas, start=1):
        if len(term.elements) == 1:
            break
        formula = gamma_formula(index, precision, cap)
        records.append(AssertionRecord.verdict(
            f"gamma_{index}(P) mod 3^{precision}",
            "Thm 1(ii)",
            term.elements == formula,
            f"order {len(term.elements)} vs formula {len(formula)}",
        ))
    with metrics.timed("sl2", f"derived_M{precision}"):
        derived = derived_series(precision, cap)
    for i, term in enumerate(derived):
        if len(term.elements) == 1:
            break
        index = derived_to_gamma_index(i)
        if index > len(gammas):
            break
        target = gammas[index - 1].elements
        records.append(AssertionRecord.verdict(
            f"P^({i}) = gamma_{index}(P) mod 3^{precision}",
            "Thm 1(iii)",
            term.elements == target,
            f"order {len(term.elements)} vs {len(target)}",
        ))
    return records


def matrix_commutator_identity_check(A: Sequence[int], B: Sequence[int], m: int, n: int, precision: int) -> bool:
    """
    [1 + 3^m A, 1 + 3^n B] = 1 + 3^(m+n) (AB - BA) modulo 3^(m+n+min(m,n))

    A and B are integral matrices in row-major order.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    needed = m + n + min(m, n)
    if precision < needed:
        raise PrecisionError(f"commutator identity needs precision >= {needed}")
    q = PRIME ** precision
    x = tuple((int(i == j) + PRIME ** m * A[2 * i + j]) % q for i in range(2) for j in range(2))
    y = tuple((int(i == j) + PRIME ** n * B[2 * i + j]) % q for i in range(2) for j in range(2))
    lhs = _comm(x, y, q)
    ab = _mul(tuple(A), tuple(B), q)
    ba = _mul(tuple(B), tuple(A), q)
    scale = PRIME ** (m + n)
    rhs = tuple((int(k in (0, 3)) + scale * (u - v)) for k, (u, v) in enumerate(zip(ab, ba)))
    check = PRIME ** needed
    return all((a - b) % check == 0 for a, b in zip(lhs, rhs))


def nk_commutator_check(k: int, l: int, precision: int, cap: Optional[int] = None) -> bool:
    """[N_k, N_l] = N_(k+l) in SL_2(Z/3^precision)"""
    if k + l >= precision:
        return True
    q = PRIME ** precision
    comms = [
        Mat2(_comm(g.key, h.key, q), precision)
        for g in nk_generators(k, precision)
        for h in nk_generators(l, precision)
    ]
    closure = normal_closure_in_P(comms, precision, cap)
    return closure.elements == nk_elements(k + l, precision)


def y_cube_conjugator(precision: int) -> Optional[Mat2]:
    """c in {1, rho(x), rho(x)^2} with c^-1 rho(y)^3 c = rho(z2 z1 z0)"""
    y3 = rho("y", precision) ** 3
    target = rho_z(2, precision) * rho_z(1, precision) * rho_z(0, precision)
    x = rho("x", precision)
    for c in (Mat2.identity(precision), x, x * x):
        if y3.conjugate(c) == target:
            return c
    return None


def z_power_diagonal_check(k: int, precision: int) -> bool:
    """rho(z0^(3^(k-1))) = diag(alpha^-(3^(k-1)), alpha^(3^(k-1)))"""
    e = PRIME ** (k - 1)
    q = PRIME ** precision
    alpha = sqrt_minus2(precision).value
    expected = (pow(alpha, -e, q), 0, 0, pow(alpha, e, q))
    return _z_power(0, e, precision).key == expected


def nk_layer_rank(k: int, precision: int) -> int:
    """F_3-rank of rho(z_i^(3^(k-1))) in N_k/N_(k+1)"""
    if k >= precision:
        raise PrecisionError(f"N_{k}/N_{k + 1} needs precision > {k}")
    e = PRIME ** (k - 1)
    t = PRIME ** k
    vectors = []
    for i in range(3):
        m = _z_power(i, e, precision)
        if not is_in_Nk(m, k):
            return 0
        a, b, c, d = m.key
        vectors.append([((a - 1) // t) % PRIME, (b // t) % PRIME, (c // t) % PRIME, ((d - 1) // t) % PRIME])
    return rank_mod_p(vectors)


@traced("sl2")
def lemma2_report(precision: int, samples: int = 1000, seed: int = 0, cap: Optional[int] = None) -> list[AssertionRecord]:
    """Checks of the representation rho at one precision"""
    records = []
    x, y = rho("x", precision), rho("y", precision)
    alpha = sqrt_minus2(precision)
    records.append(AssertionRecord.check("alpha^2 = -2", "Lemma 2", (-2) % alpha.modulus, (alpha * alpha).value))
    records.append(AssertionRecord.verdict("rho(x)^3 = 1", "Lemma 2", (x ** 3).is_identity))
    records.append(AssertionRecord.check("det rho(y)", "Lemma 2", 1, y.det().value))
    t_rel = fpgroup.schur_sigma_relator(fpgroup.t_word())
    records.append(AssertionRecord.verdict("rho(t^-1 sigma(t)) = 1", "Lemma 2", rho_word(t_rel, precision).is_identity))

    with metrics.timed("sl2", f"sylow_bfs_M{precision}"):
        group = bfs_enumerate(MatGroup((x, y), precision), cap)
    records.append(AssertionRecord.check(
        f"|<rho(x), rho(y)>| mod 3^{precision}", "Lemma 2", sylow_order(precision), group.order
    ))
    records.append(AssertionRecord.verdict(
        "<rho(x), rho(y)> = N_1 <rho(x)>", "Lemma 2", group.elements == sylow_elements(precision)
    ))

    rng = random.Random(seed)
    sigma_ok = True
    det_ok = True
    for _ in range(samples):
        w = fpgroup.random_word(rng, 2)
        image = rho_word(w, precision)
        det_ok = det_ok and image.det().value == 1
        sigma_ok = sigma_ok and rho_word(fpgroup.apply_sigma(w), precision) == sigma_prime(image)
    records.append(AssertionRecord.verdict(f"det rho(w) = 1 on {samples} words", "Lemma 2", det_ok))
    records.append(AssertionRecord.verdict(f"sigma' rho = rho sigma on {samples} words", "Lemma 2", sigma_ok))

    for k in range(1, precision):
        records.append(AssertionRecord.check(f"rank N_{k}/N_{k + 1} from z_i", "Lemma 2", 3, nk_layer_rank(k, precision)))
        records.append(AssertionRecord.verdict(f"rho(z0^(3^{k - 1})) diagonal", "Lemma 2", z_power_diagonal_check(k, precision)))

    conjugator = y_cube_conjugator(precision)
    records.append(AssertionRecord.verdict(
        "y^3 conjugate to z2 z1 z0", "Lemma 3", conjugator is not None,
        f"conjugator {conjugator.key}" if conjugator else "no conjugator in <rho(x)>",
    ))
    return records


def congruence_subset_orders(n: int, precision: Optional[int] = None) -> dict[tuple[int, ...], int]:
    """Order of the subset of P cut out by each subset of the five congruences"""
    precision = precision or n + 2
    if precision < n + 2:
        raise PrecisionError(f"congruences for n={n} need precision >= {n + 2}")
    flags = [_congruences(Mat2(m, precision), n) for m in sylow_elements(precision)]
    orders = {}
    for size in range(6):
        for subset in itertools.combinations(range(5), size):
            orders[subset] = sum(1 for f in flags if all(f[i] for i in subset))
    return orders


def minimal_congruence_subsets(n: int, precision: Optional[int] = None) -> list[tuple[int, ...]]:
    """Smallest subsets of congruences that already cut out the kernel"""
    orders = congruence_subset_orders(n, precision)
    full = orders[(0, 1, 2, 3, 4)]
    hits = [s for s, order in orders.items() if order == full]
    smallest = min(len(s) for s in hits)
    return [s for s in hits if len(s) == smallest]


@traced("sl2")
def lemma3_report(n: int, precision: Optional[int] = None, cap: Optional[int] = None) -> list[AssertionRecord]:
    """Normal closure of rho(y^(3^n)) against the congruence description"""
    precision = precision or n + 2
    y_power = rho("y", precision) ** (PRIME ** n)
    records = [AssertionRecord.verdict(
        f"rho(y^(3^{n})) satisfies the congruences", "Lemma 3", hn_kernel_membership(y_power, n)
    )]
    with metrics.timed("sl2", f"lemma3_n{n}_M{precision}"):
        closure = normal_closure_in_P([y_power], precision, cap)
    congruent = frozenset(m for m in sylow_elements(precision) if hn_kernel_membership(Mat2(m, precision), n))
    records.append(AssertionRecord.verdict(
        f"normal closure = congruence subgroup (n={n}, M={precision})",
        "Lemma 3",
        closure.elements == congruent,
        f"orders {closure.order} vs {len(congruent)}",
    ))
    printed = frozenset(
        m for m in sylow_elements(precision) if hn_kernel_membership(Mat2(m, precision), n, printed=True)
    )
    records.append(AssertionRecord(
        name=f"congruences with {PRINTED_FOURTH} (n={n}, M={precision})",
        anchor="Lemma 3",
        expected="measured",
        actual=f"order {len(printed)}, equals normal closure: {str(printed == closure.elements).lower()}",
        passed=True,
    ))
    if precision == n + 2:
        records.append(AssertionRecord.check(
            f"|P : R| (n={n}, M={precision})", "Thm 1(i)", PRIME ** (3 * n + 1), sylow_order(precision) // closure.order
        ))
    minimal = minimal_congruence_subsets(n, precision)
    records.append(AssertionRecord(
        name=f"minimal congruence subsets (n={n})",
        anchor="Lemma 3",
        expected="measured",
        actual="; ".join("+".join(CONGRUENCES[i] for i in s) for s in minimal),
        passed=True,
    ))
    return records


def nk_commutator_report(precision: int = 4, cap: Optional[int] = None) -> list[AssertionRecord]:
    records = []
    for k, l in ((1, 1), (1, 2), (2, 1)):
        records.append(AssertionRecord.verdict(
            f"[N_{k}, N_{l}] = N_{k + l} mod 3^{precision}", "Thm 1(iii)", nk_commutator_check(k, l, precision, cap)
        ))
    return records


def identities_report(samples: int = 100, seed: int = 0) -> list[AssertionRecord]:
    rng = random.Random(seed)
    records = []
    for m, n in ((1, 1), (1, 2), (2, 1)):
        precision = m + n + min(m, n)
        ok = True
        for _ in range(samples):
            A = [rng.randrange(PRIME ** precision) for _ in range(4)]
            B = [rng.randrange(PRIME ** precision) for _ in range(4)]
            ok = ok and matrix_commutator_identity_check(A, B, m, n, precision)
        records.append(AssertionRecord.verdict(
            f"commutator identity m={m} n={n} mod 3^{precision} ({samples} samples)", "Thm 1(iii)", ok
        ))
    return records
