"""
Free-Group Words and Finite Presentations

Words are stored run-length encoded as (generator, exponent) syllables, so
relators such as y^(3^n) stay small for every n. Generator 0 is x and
generator 1 is y whenever a presentation has at most two generators.

Usage:
    from services import fpgroup

    g1 = fpgroup.gn_presentation(1)
    print(fpgroup.format_presentation(g1))

    k = fpgroup.rewrite_index3(fpgroup.h_presentation(), fpgroup.index3_transversal())
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import structlog

from services.abelian import AbelianInvariants, smith_invariants
from services.errors import PresentationError

logger = structlog.get_logger(__name__)

X, Y = 0, 1

Syllable = tuple[int, int]


def free_reduce(letters: Iterable[Syllable]) -> "Word":
    """Merge equal neighbours and cancel inverse pairs"""
    out: list[list[int]] = []
    for gen, exp in letters:
        if exp == 0:
            continue
        if out and out[-1][0] == gen:
            total = out[-1][1] + exp
            if total:
                out[-1][1] = total
            else:
                out.pop()
        else:
            out.append([gen, exp])
    return Word(tuple((g, e) for g, e in out))


@dataclass(frozen=True)
class Word:
    """Freely reduced word as a tuple of syllables"""

    letters: tuple[Syllable, ...] = ()

    def __post_init__(self):
        previous = None
        for gen, exp in self.letters:
            if gen < 0 or exp == 0 or gen == previous:
                raise PresentationError(f"word {self.letters!r} is not freely reduced")
            previous = gen

    @classmethod
    def gen(cls, index: int, exp: int = 1) -> "Word":
        return free_reduce([(index, exp)])

    def __iter__(self) -> Iterator[Syllable]:
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return free_reduce(self.letters + other.letters)

    def __invert__(self) -> "Word":
        return self.inverse()

    def __pow__(self, exponent: int) -> "Word":
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = Word()
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def inverse(self) -> "Word":
        return Word(tuple((g, -e) for g, e in reversed(self.letters)))

    @property
    def is_identity(self) -> bool:
        return not self.letters

    @property
    def length(self) -> int:
        """Number of letters, counting exponents"""
        return sum(abs(e) for _, e in self.letters)

    @property
    def max_generator(self) -> int:
        return max((g for g, _ in self.letters), default=-1)

    def exponent_sums(self, num_gens: int) -> list[int]:
        sums = [0] * num_gens
        for gen, exp in self.letters:
            sums[gen] += exp
        return sums


def cyclically_reduce(w: Word) -> Word:
    """Conjugate w to a cyclically reduced word"""
    letters = list(w.letters)
    while len(letters) >= 2 and letters[0][0] == letters[-1][0]:
        gen = letters[0][0]
        total = letters[0][1] + letters[-1][1]
        letters = letters[1:-1]
        if total:
            letters = [(gen, total)] + letters
        # merge may have created new neighbours at the front
        letters = list(free_reduce(letters).letters)
    return Word(tuple(letters))


def cyclic_key(w: Word) -> tuple[Syllable, ...]:
    """Canonical key of w up to cyclic rotation and inversion"""
    w = cyclically_reduce(w)
    candidates = []
    for variant in (w, cyclically_reduce(w.inverse())):
        seq = variant.letters
        candidates.extend(seq[i:] + seq[:i] for i in range(max(len(seq), 1)))
    return min(candidates)


def apply_sigma(w: Word, num_gens: int = 2) -> Word:
    """Invert every generator: x -> x^-1, y -> y^-1"""
    if w.max_generator >= num_gens or num_gens > 2:
        raise PresentationError("sigma is only defined on words over {x, y}")
    return free_reduce((g, -e) for g, e in w.letters)


def schur_sigma_relator(r: Word) -> Word:
    """The relator r^-1 sigma(r)"""
    return r.inverse() * apply_sigma(r)


def commutator(a: Word, b: Word) -> Word:
    """[a, b] = a^-1 b^-1 a b"""
    return a.inverse() * b.inverse() * a * b


def x_word() -> Word:
    return Word.gen(X)


def y_word() -> Word:
    return Word.gen(Y)


def r_word(n: int) -> Word:
    """r_n = x^3 y^(-3^n)"""
    return Word(((X, 3), (Y, -(3**n))))


def t_word() -> Word:
    """t = y x y x^-1 y"""
    return free_reduce([(Y, 1), (X, 1), (Y, 1), (X, -1), (Y, 1)])


def z_word(i: int) -> Word:
    """z_i = x^-i y x^(i-1)"""
    return free_reduce([(X, -i), (Y, 1), (X, i - 1)])


def default_names(num_gens: int) -> tuple[str, ...]:
    if num_gens <= 2:
        return ("x", "y")[:num_gens]
    return tuple(f"z{i}" for i in range(num_gens))


@dataclass(frozen=True)
class Presentation:
    """Generators and relators of a finitely presented (pro-3) group"""

    num_gens: int
    relators: tuple[Word, ...] = ()
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.num_gens < 1:
            raise PresentationError("a presentation needs at least one generator")
        for relator in self.relators:
            if relator.max_generator >= self.num_gens:
                raise PresentationError(
                    f"relator uses generator {relator.max_generator} of {self.num_gens}"
                )
        if not self.names:
            object.__setattr__(self, "names", default_names(self.num_gens))
        elif len(self.names) != self.num_gens or len(set(self.names)) != self.num_gens:
            raise PresentationError("generator names must be distinct, one per generator")


def _check_n(n: int):
    if not isinstance(n, int) or n <= 0:
        raise PresentationError(f"n must be a positive integer, got {n!r}")


def gn_presentation(n: int) -> Presentation:
    """G_n = < x, y | r_n^-1 sigma(r_n), t^-1 sigma(t) >"""
    _check_n(n)
    return Presentation(2, (schur_sigma_relator(r_word(n)), schur_sigma_relator(t_word())))


def hn_presentation(n: int) -> Presentation:
    """H_n = < x, y | x^3, y^(3^n), t^-1 sigma(t) >"""
    _check_n(n)
    return Presentation(2, (Word.gen(X, 3), Word.gen(Y, 3**n), schur_sigma_relator(t_word())))


def h_presentation() -> Presentation:
    """H = < x, y | x^3, t^-1 sigma(t) >"""
    return Presentation(2, (Word.gen(X, 3), schur_sigma_relator(t_word())))


def k_presentation() -> Presentation:
    """K on z0, z1, z2 with relators z_i z_(i+1)^2 z_i^2 z_(i+1)"""
    relators = []
    for i in range(3):
        j = (i + 1) % 3
        relators.append(free_reduce([(i, 1), (j, 2), (i, 2), (j, 1)]))
    return Presentation(3, tuple(relators))


def k_commutator_presentation() -> Presentation:
    """K on z0, z1, z2 with relators [z_i, z_(i+1)^-1] z_(i+1)^3 z_i^3"""
    relators = []
    for i in range(3):
        j = (i + 1) % 3
        relators.append(commutator(Word.gen(i), Word.gen(j, -1)) * Word.gen(j, 3) * Word.gen(i, 3))
    return Presentation(3, tuple(relators))


@dataclass(frozen=True)
class Transversal:
    """
    Coset representatives for the kernel of a map onto Z/index

    shifts[g] is the image of generator g, so the coset of a word is the
    weighted exponent sum modulo index.
    """

    representatives: tuple[Word, ...]
    shifts: tuple[int, ...]

    def __post_init__(self):
        for coset, rep in enumerate(self.representatives):
            if self.coset_of(rep) != coset:
                raise PresentationError(f"representative {coset} lies in coset {self.coset_of(rep)}")

    @property
    def index(self) -> int:
        return len(self.representatives)

    def coset_of(self, w: Word) -> int:
        return sum(self.shifts[g] * e for g, e in w.letters) % self.index

    def schreier_generator(self, coset: int, gen: int) -> Word:
        """R[c] g R[c + shift(g)]^-1"""
        target = (coset + self.shifts[gen]) % self.index
        return self.representatives[coset] * Word.gen(gen) * self.representatives[target].inverse()

    def schreier_generators(self) -> list[tuple[int, int, Word]]:
        """Nontrivial Schreier generators as (coset, generator, word)"""
        found = []
        for gen in range(len(self.shifts)):
            for coset in range(self.index):
                word = self.schreier_generator(coset, gen)
                if not word.is_identity:
                    found.append((coset, gen, word))
        # z_i corresponds to coset -i, which makes S(c, y) read as x^-i y x^(i-1)
        found.sort(key=lambda item: (item[1], (-item[0]) % self.index))
        return found


def index3_transversal() -> Transversal:
    """{e, x, x^2} for the kernel of x, y -> 1 mod 3"""
    return Transversal((Word(), Word.gen(X), Word.gen(X, 2)), (1, 1))


def trivial_transversal(num_gens: int) -> Transversal:
    return Transversal((Word(),), (0,) * num_gens)


def _rewrite(word: Word, start: int, tv: Transversal, index_of: dict) -> list[Syllable]:
    out: list[Syllable] = []
    coset = start
    for gen, exp in word.letters:
        step = 1 if exp > 0 else -1
        for _ in range(abs(exp)):
            if step > 0:
                sg = index_of.get((coset, gen))
                coset = (coset + tv.shifts[gen]) % tv.index
                if sg is not None:
                    out.append((sg, 1))
            else:
                coset = (coset - tv.shifts[gen]) % tv.index
                sg = index_of.get((coset, gen))
                if sg is not None:
                    out.append((sg, -1))
    if coset != start:
        raise PresentationError("relator does not lie in the subgroup")
    return out


def rewrite_index3(p: Presentation, tv: Transversal) -> Presentation:
    """
    Reidemeister-Schreier presentation of the subgroup defined by tv

    Args:
        p: Presentation of the ambient group
        tv: Index-3 (or trivial) transversal with generator shifts

    Returns:
        Presentation on the surviving Schreier generators, cleaned of
        trivial, eliminated and duplicate relators
    """
    if len(tv.shifts) != p.num_gens:
        raise PresentationError("transversal shifts do not match the generator count")
    if tv.index == 1:
        return p
    if tv.index != 3:
        raise PresentationError(f"coset action has index {tv.index}, expected 3")
    for relator in p.relators:
        if tv.coset_of(relator) != 0:
            raise PresentationError("coset action is not well defined on the relators")

    schreier = tv.schreier_generators()
    index_of = {(coset, gen): i for i, (coset, gen, _) in enumerate(schreier)}

    words = []
    for relator in p.relators:
        for start in range(tv.index):
            words.append(free_reduce(_rewrite(relator, start, tv, index_of)))

    killed: set[int] = set()
    while True:
        kill = {w.letters[0][0] for w in words if len(w.letters) == 1 and abs(w.letters[0][1]) == 1}
        if not kill:
            break
        killed |= kill
        words = [free_reduce((g, e) for g, e in w.letters if g not in kill) for w in words]
        words = [w for w in words if not w.is_identity]

    survivors = [i for i in range(len(schreier)) if i not in killed]
    renumber = {old: new for new, old in enumerate(survivors)}

    kept, seen = [], set()
    for w in words:
        w = cyclically_reduce(free_reduce((renumber[g], e) for g, e in w.letters))
        if w.is_identity:
            continue
        key = cyclic_key(w)
        if key in seen:
            continue
        seen.add(key)
        kept.append(w)

    logger.debug(
        "rewrite_index3_done",
        schreier_generators=len(schreier),
        eliminated=len(killed),
        relators=len(kept)
    )
    return Presentation(len(survivors), tuple(kept))


def canonical_relators(p: Presentation) -> frozenset:
    """Relator set up to rotation and inversion of each relator"""
    return frozenset(cyclic_key(r) for r in p.relators)


def abelian_invariants(p: Presentation, prime: Optional[int] = None) -> AbelianInvariants:
    """
    Abelianization of p by Smith normal form

    With prime set, only the p-primary part is returned, which is the
    abelianization of the pro-p completion.
    """
    rows = [r.exponent_sums(p.num_gens) for r in p.relators]
    invariants = smith_invariants(rows, p.num_gens)
    if prime is not None:
        return invariants.p_part(prime)
    return invariants


def same_normal_closure(pA: Presentation, pB: Presentation, class_bound: Optional[int] = None,
                        order_cap: Optional[int] = None) -> bool:
    """
    Compare two presentations on the same generators through their 3-quotients

    True iff the maximal 3-quotients of class <= class_bound have equal
    orders and each presentation's relators vanish in the other's quotient,
    so generator-respecting epimorphisms exist both ways.
    """
    from services import pquotient
    from services.config import get_settings

    if pA.num_gens != pB.num_gens:
        raise PresentationError("presentations must share a generator count")

    settings = get_settings()
    class_bound = class_bound or settings.closure_class
    order_cap = order_cap or settings.closure_cap

    qa = pquotient.p_quotient(pA, class_bound, order_cap=order_cap)
    qb = pquotient.p_quotient(pB, class_bound, order_cap=order_cap)
    if qa.quotient.order != qb.quotient.order:
        logger.debug("normal_closure_orders_differ", left=qa.quotient.order, right=qb.quotient.order)
        return False
    return qa.relators_vanish(pB.relators) and qb.relators_vanish(pA.relators)


# Text format

_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*(?:\^\s*\(?\s*(-?\d+)\s*\)?)?\s*\*?")


def parse_word(text: str, names: Sequence[str]) -> Word:
    """Parse letter-exponent syntax such as 'x^3 y^-9'"""
    text = text.strip()
    if text in ("", "1", "e"):
        return Word()
    lookup = {name: i for i, name in enumerate(names)}
    letters = []
    pos = 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise PresentationError(f"cannot parse word at {text[pos:]!r}")
        name, exp = match.group(1), match.group(2)
        if name not in lookup:
            raise PresentationError(f"unknown generator {name!r}")
        letters.append((lookup[name], int(exp) if exp is not None else 1))
        pos = match.end()
    return free_reduce(letters)


def format_word(w: Word, names: Sequence[str]) -> str:
    if w.is_identity:
        return "1"
    return " ".join(names[g] if e == 1 else f"{names[g]}^{e}" for g, e in w.letters)


def parse_presentation(text: str) -> Presentation:
    """
    Parse the presentation text format

    First line 'gens: k' (optionally followed by k generator names), then
    one relator per line. Blank lines and '#' comments are ignored.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].lower().startswith("gens:"):
        raise PresentationError("presentation must start with a 'gens: k' line")
    header = lines[0].split(":", 1)[1].split()
    try:
        num_gens = int(header[0])
    except (IndexError, ValueError) as e:
        raise PresentationError(f"bad generator count line {lines[0]!r}") from e
    names = tuple(header[1:]) or default_names(num_gens)
    if len(names) != num_gens:
        raise PresentationError("generator names do not match the generator count")
    relators = tuple(parse_word(line, names) for line in lines[1:])
    return Presentation(num_gens, tuple(r for r in relators if not r.is_identity), names)


def format_presentation(p: Presentation) -> str:
    header = f"gens: {p.num_gens}"
    if p.names != default_names(p.num_gens):
        header += " " + " ".join(p.names)
    return "\n".join([header] + [format_word(r, p.names) for r in p.relators]) + "\n"


def random_word(rng: random.Random, num_gens: int, max_syllables: int = 8, max_exp: int = 3) -> Word:
    """Random reduced word, used by sampled property checks"""
    letters = []
    for _ in range(rng.randint(0, max_syllables)):
        exp = rng.randint(1, max_exp) * rng.choice((-1, 1))
        letters.append((rng.randrange(num_gens), exp))
    return free_reduce(letters)
