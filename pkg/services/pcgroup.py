"""
Finite 3-Groups as Power-Commutator Presentations

A PcGroup on generators a_0..a_(n-1) has relative order 3 everywhere:
a_i^3 is a normal word in later generators and [a_j, a_i] (j > i) is a
normal word in generators after a_j. Elements are exponent tuples with
entries in {0, 1, 2}; arithmetic is collection from the left.

Commutators follow [a, b] = a^-1 b^-1 a b, so a_j^(a_i) = a_j [a_j, a_i].

Usage:
    from services import pcgroup

    q1 = pcgroup.q1()
    x1, x2 = q1.generator(0), q1.generator(1)
    assert q1.commutator(x2, x1) == q1.generator(2)
    print([str(q1.abelian_invariants(m)) for m in q1.maximal_subgroups()])
"""

from __future__ import annotations

import itertools
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Sequence

import structlog

from services.abelian import AbelianInvariants
from services.errors import ConsistencyError, PresentationError, ResourceLimitError

logger = structlog.get_logger(__name__)

PRIME = 3

Element = tuple[int, ...]

# ("power", i) or ("commutator", j, i): the relation whose right-hand side
# contains the defined generator with exponent 1
Definition = tuple


def _lead(g: Element) -> int:
    for i, e in enumerate(g):
        if e:
            return i
    return -1


@dataclass(frozen=True)
class SubgroupRecord:
    """Subgroup given by an induced generating sequence with increasing leads"""

    igs: tuple[Element, ...] = ()

    @property
    def order(self) -> int:
        return PRIME ** len(self.igs)

    @property
    def leads(self) -> tuple[int, ...]:
        return tuple(_lead(g) for g in self.igs)

    @property
    def is_trivial(self) -> bool:
        return not self.igs

    def __len__(self) -> int:
        return len(self.igs)


class PcGroup:
    """Consistent pc presentation of a finite 3-group"""

    def __init__(
        self,
        num_gens: int,
        powers: Optional[dict] = None,
        commutators: Optional[dict] = None,
        weights: Optional[Sequence[int]] = None,
        definitions: Optional[Sequence[Optional[Definition]]] = None,
    ):
        if num_gens < 0:
            raise PresentationError("generator count must be non-negative")
        n = num_gens
        self.num_gens = n
        self._identity: Element = (0,) * n

        power_list = [self._identity] * n
        for i, rhs in (powers or {}).items():
            power_list[i] = self._normal(rhs, after=i)
        comm_map = {}
        for (j, i), rhs in (commutators or {}).items():
            if not 0 <= i < j < n:
                raise PresentationError(f"commutator key ({j},{i}) must satisfy j > i")
            word = self._normal(rhs, after=j)
            if any(word):
                comm_map[(j, i)] = word
        self.powers: tuple[Element, ...] = tuple(power_list)
        self.commutators: dict[tuple[int, int], Element] = comm_map
        self.weights = tuple(weights) if weights is not None else None
        self.definitions = tuple(definitions) if definitions is not None else None
        self._build_tables()

    # -- construction helpers

    def _normal(self, rhs, after: int) -> Element:
        if isinstance(rhs, dict):
            vec = [0] * self.num_gens
            for gen, exp in rhs.items():
                vec[gen] = exp % PRIME
            rhs = tuple(vec)
        rhs = tuple(int(e) for e in rhs)
        if len(rhs) != self.num_gens or any(not 0 <= e < PRIME for e in rhs):
            raise PresentationError(f"right-hand side {rhs!r} is not a normal word")
        if any(rhs[: after + 1]):
            raise PresentationError(f"right-hand side {rhs!r} must only involve generators after {after}")
        return rhs

    def _build_tables(self):
        n = self.num_gens
        self._power_words = [tuple((k, e) for k, e in enumerate(w) if e) for w in self.powers]
        self._conj = {}
        for (j, i), word in self.commutators.items():
            self._conj[(j, i)] = ((j, 1),) + tuple((k, e) for k, e in enumerate(word) if e)
        central = [True] * n
        for (j, i) in self.commutators:
            central[j] = central[i] = False
        self._central = tuple(central)
        noncentral = [j for j in range(n) if not central[j]]
        self._movers = [tuple(j for j in noncentral if j > g) for g in range(n)]
        self._first_conj = []
        for g in range(n):
            hits = [j for (j, i) in self.commutators if i == g]
            self._first_conj.append(min(hits) if hits else n)
        self._gens = tuple(tuple(1 if k == i else 0 for k in range(n)) for i in range(n))

    # -- identity and hashing

    @property
    def key(self) -> tuple:
        return (self.num_gens, self.powers, tuple(sorted(self.commutators.items())))

    def __eq__(self, other) -> bool:
        return isinstance(other, PcGroup) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"<PcGroup order 3^{self.num_gens}>"

    @property
    def order(self) -> int:
        return PRIME ** self.num_gens

    @property
    def identity(self) -> Element:
        return self._identity

    def generator(self, i: int) -> Element:
        return self._gens[i]

    def generators(self) -> tuple[Element, ...]:
        return self._gens

    def is_central_generator(self, i: int) -> bool:
        return self._central[i]

    # -- collection

    def _collect(self, exps: list[int], stack: list[tuple[int, int]]):
        conj = self._conj
        movers = self._movers
        first_conj = self._first_conj
        power_words = self._power_words
        while stack:
            g, k = stack.pop()
            if k > 1:
                stack.append((g, k - 1))
            overflow = exps[g] == PRIME - 1
            start = g + 1 if overflow else first_conj[g]
            pending: list[tuple[int, int]] = []
            for j in movers[g]:
                if j < start:
                    continue
                e = exps[j]
                if not e:
                    continue
                exps[j] = 0
                word = conj.get((j, g))
                if word is None:
                    pending.append((j, e))
                else:
                    pending.extend(word * e)
            if overflow:
                exps[g] = 0
                stack.extend(reversed(pending))
                stack.extend(reversed(power_words[g]))
            else:
                exps[g] += 1
                stack.extend(reversed(pending))

    def multiply(self, u: Element, v: Element) -> Element:
        lead_v = _lead(v)
        if lead_v < 0:
            return u
        if not any(u[lead_v + 1:]):
            # u only reaches up to lead_v: a plain merge unless the lead overflows
            if u[lead_v] + v[lead_v] < PRIME:
                return u[:lead_v] + (u[lead_v] + v[lead_v],) + v[lead_v + 1:]
        exps = list(u)
        stack = [(i, v[i]) for i in range(self.num_gens - 1, -1, -1) if v[i]]
        self._collect(exps, stack)
        return tuple(exps)

    def collect(self, letters: Iterable[tuple[int, int]]) -> Element:
        """Normal form of a word in the pc generators (exponents may be negative)"""
        result = self._identity
        for gen, exp in letters:
            result = self.multiply(result, self.power(self._gens[gen], exp))
        return result

    def inverse(self, u: Element) -> Element:
        result = [0] * self.num_gens
        current = u
        for i in range(self.num_gens):
            e = current[i]
            if not e:
                continue
            k = PRIME - e
            result[i] = k
            exps = list(current)
            self._collect(exps, [(i, k)])
            current = tuple(exps)
        return tuple(result)

    def power(self, u: Element, exponent: int) -> Element:
        if exponent < 0:
            u = self.inverse(u)
            exponent = -exponent
        result = self._identity
        base = u
        while exponent:
            if exponent & 1:
                result = self.multiply(result, base)
            exponent >>= 1
            if exponent:
                base = self.multiply(base, base)
        return result

    def commutator(self, a: Element, b: Element) -> Element:
        """[a, b] = a^-1 b^-1 a b"""
        return self.multiply(self.inverse(self.multiply(b, a)), self.multiply(a, b))

    def conjugate(self, a: Element, b: Element) -> Element:
        """a^b = b^-1 a b"""
        return self.multiply(self.inverse(b), self.multiply(a, b))

    def evaluate(self, word, images: Sequence[Element]) -> Element:
        """Image of a free-group word (syllables) under generator images"""
        result = self._identity
        for gen, exp in word:
            result = self.multiply(result, self.power(images[gen], exp))
        return result

    def evaluate_normal(self, exponents: Element, images: Sequence[Element]) -> Element:
        """Image of a normal word of another pc group under its generator images"""
        result = self._identity
        for gen, exp in enumerate(exponents):
            if exp:
                result = self.multiply(result, self.power(images[gen], exp))
        return result

    def element_order(self, u: Element) -> int:
        order = 1
        while any(u):
            u = self.power(u, PRIME)
            order *= PRIME
        return order

    def elements(self) -> Iterator[Element]:
        return itertools.product(range(PRIME), repeat=self.num_gens)

    # -- consistency

    def consistency_pairs(self, upto: Optional[int] = None) -> Iterator[tuple[str, Element, Element]]:
        """
        Test words that must collect identically both ways

        Yields (label, left, right) for (a_k a_j) a_i vs a_k (a_j a_i),
        a_j^3 a_i, a_j a_i^3 and a_i a_i^3 among the first `upto` generators.
        """
        m = self.num_gens if upto is None else upto
        e = self._gens
        sq = [self.multiply(g, g) for g in e]
        pw = self.powers
        mul = self.multiply
        for i in range(m):
            for j in range(i + 1, m):
                ji = mul(e[j], e[i])
                for k in range(j + 1, m):
                    yield (f"a{k}a{j}a{i}", mul(mul(e[k], e[j]), e[i]), mul(e[k], ji))
                yield (f"a{j}^3a{i}", mul(pw[j], e[i]), mul(sq[j], ji))
                yield (f"a{j}a{i}^3", mul(mul(e[j], sq[i]), e[i]), mul(e[j], pw[i]))
            yield (f"a{i}^4", mul(pw[i], e[i]), mul(e[i], pw[i]))

    def consistency_failures(self) -> list[str]:
        return [label for label, left, right in self.consistency_pairs() if left != right]

    def is_consistent(self) -> bool:
        failures = self.consistency_failures()
        if failures:
            logger.debug("pc_presentation_inconsistent", failures=failures[:5], total=len(failures))
        return not failures

    def require_consistent(self):
        if not self.is_consistent():
            raise ConsistencyError("pc presentation is inconsistent")

    # -- subgroups

    def whole(self) -> SubgroupRecord:
        return SubgroupRecord(self._gens)

    def trivial(self) -> SubgroupRecord:
        return SubgroupRecord()

    def _sift(self, g: Element, table: dict) -> Element:
        while True:
            lead = _lead(g)
            if lead < 0:
                return g
            entry = table.get(lead)
            if entry is None:
                return g
            g = self.multiply(g, entry[PRIME - g[lead] - 1])

    @staticmethod
    def _table(record: SubgroupRecord, group: "PcGroup") -> dict:
        # each entry stores (h, h^2) for clearing exponents 2 and 1
        return {_lead(h): (h, group.multiply(h, h)) for h in record.igs}

    def contains(self, record: SubgroupRecord, g: Element) -> bool:
        return not any(self._sift(g, self._table(record, self)))

    def _closure(self, gens: Iterable[Element], conjugators: Sequence[Element]) -> SubgroupRecord:
        table: dict[int, tuple[Element, Element]] = {}
        queue = list(gens)
        while queue:
            r = self._sift(queue.pop(), table)
            lead = _lead(r)
            if lead < 0:
                continue
            if r[lead] != 1:
                r = self.multiply(r, r)
            others = [entry[0] for entry in table.values()]
            table[lead] = (r, self.multiply(r, r))
            queue.append(self.power(r, PRIME))
            for h in others:
                queue.append(self.commutator(r, h))
            for c in conjugators:
                queue.append(self.commutator(r, c))
        return SubgroupRecord(tuple(table[k][0] for k in sorted(table)))

    def subgroup_closure(self, gens: Iterable[Element]) -> SubgroupRecord:
        return self._closure(gens, ())

    def normal_closure(self, gens: Iterable[Element]) -> SubgroupRecord:
        return self._closure(gens, self._gens)

    def derived_subgroup(self, record: Optional[SubgroupRecord] = None) -> SubgroupRecord:
        if record is None:
            record = self.whole()
        igs = record.igs
        comms = [self.commutator(igs[j], igs[i]) for i in range(len(igs)) for j in range(i + 1, len(igs))]
        return self._closure(comms, igs)

    def frattini_subgroup(self) -> SubgroupRecord:
        gens = [self.power(g, PRIME) for g in self._gens]
        gens += [self.commutator(self._gens[j], self._gens[i])
                 for i in range(self.num_gens) for j in range(i + 1, self.num_gens)]
        return self.normal_closure(gens)

    # -- series

    def lower_central_series(self) -> list[SubgroupRecord]:
        series = [self.whole()]
        while not series[-1].is_trivial:
            comms = [self.commutator(g, a) for g in series[-1].igs for a in self._gens]
            series.append(self.normal_closure(comms))
        return series

    def lower_p_central_series(self) -> list[SubgroupRecord]:
        """P_1 = G, P_k = P_(k-1)^3 [G, P_(k-1)] for k >= 2"""
        series = [self.whole()]
        while not series[-1].is_trivial:
            current = series[-1].igs
            gens = [self.power(g, PRIME) for g in current]
            gens += [self.commutator(g, a) for g in current for a in self._gens]
            series.append(self.normal_closure(gens))
        return series

    def derived_series(self) -> list[SubgroupRecord]:
        series = [self.whole()]
        while not series[-1].is_trivial:
            series.append(self.derived_subgroup(series[-1]))
        return series

    def nilpotency_class(self) -> int:
        return len(self.lower_central_series()) - 1

    def p_class(self) -> int:
        return len(self.lower_p_central_series()) - 1

    def derived_length(self) -> int:
        return len(self.derived_series()) - 1

    # -- abelian invariants and maximal subgroups

    def abelian_invariants(self, record: Optional[SubgroupRecord] = None) -> AbelianInvariants:
        """
        Invariants of S/[S,S], read off the orders of A^(3^k)

        The number of cyclic factors of order >= 3^(k+1) is
        log_3 |A^(3^k) : A^(3^(k+1))|.
        """
        if record is None:
            record = self.whole()
        derived = self.derived_subgroup(record)
        ranks = []
        current = record
        while len(current) > len(derived):
            nxt = self.subgroup_closure(list(derived.igs) + [self.power(h, PRIME) for h in current.igs])
            ranks.append(len(current) - len(nxt))
            current = nxt
        ranks.append(0)
        orders = []
        for k in range(len(ranks) - 1):
            orders.extend([PRIME ** (k + 1)] * (ranks[k] - ranks[k + 1]))
        return AbelianInvariants.from_orders(orders)

    def _frattini_data(self):
        phi = self.frattini_subgroup()
        table = self._table(phi, self)
        leads = set(phi.leads)
        free = tuple(i for i in range(self.num_gens) if i not in leads)
        return phi, table, free

    def minimal_generators(self) -> tuple[Element, ...]:
        """Pc generators outside the Frattini leads; a minimal generating tuple"""
        _, _, free = self._frattini_data()
        return tuple(self._gens[i] for i in free)

    def generator_rank(self) -> int:
        return len(self._frattini_data()[2])

    def frattini_image(self, g: Element, data=None) -> tuple[int, ...]:
        """Coordinates of g in G/Phi(G) on the basis of minimal generators"""
        _, table, free = data or self._frattini_data()
        position = {i: k for k, i in enumerate(free)}
        vec = [0] * len(free)
        while True:
            lead = _lead(g)
            if lead < 0:
                return tuple(vec)
            entry = table.get(lead)
            if entry is not None:
                g = self.multiply(g, entry[PRIME - g[lead] - 1])
            else:
                e = g[lead]
                vec[position[lead]] = e
                g = self.multiply(g, self.power(self.inverse(self._gens[lead]), e))

    def maximal_subgroups(self) -> list[SubgroupRecord]:
        """Preimages of the hyperplanes of G/Phi(G)"""
        phi, _, free = self._frattini_data()
        d = len(free)
        subgroups = []
        for functional in itertools.product(range(PRIME), repeat=d):
            nonzero = [k for k, c in enumerate(functional) if c]
            if not nonzero or functional[nonzero[0]] != 1:
                continue
            pivot = nonzero[0]
            kernel = []
            for k in range(d):
                if k == pivot:
                    continue
                vec = [0] * self.num_gens
                vec[free[k]] = 1
                vec[free[pivot]] = (-functional[k]) % PRIME
                kernel.append(tuple(vec))
            subgroups.append(self.subgroup_closure(list(phi.igs) + kernel))
        return subgroups

    # -- homomorphisms

    def pc_relations_hold(self, images: Sequence[Element], target: "PcGroup") -> bool:
        """True iff images of the pc generators satisfy every pc relation in target"""
        n = self.num_gens
        for i in range(n):
            if target.power(images[i], PRIME) != target.evaluate_normal(self.powers[i], images):
                return False
        for i in range(n):
            for j in range(i + 1, n):
                rhs = self.commutators.get((j, i))
                expected = target.evaluate_normal(rhs, images) if rhs else target.identity
                if target.commutator(images[j], images[i]) != expected:
                    return False
        return True

    def quotient(self, normal: SubgroupRecord) -> tuple["PcGroup", Callable[[Element], Element]]:
        """
        Pc presentation of G/N and the projection onto it

        The kept generators are those that are not leads of N's igs.
        """
        table = self._table(normal, self)
        leads = set(normal.leads)
        kept = [i for i in range(self.num_gens) if i not in leads]
        index = {old: new for new, old in enumerate(kept)}

        def reduce(g: Element) -> Element:
            while True:
                position = next((i for i, e in enumerate(g) if e and i in leads), -1)
                if position < 0:
                    return tuple(g[i] for i in kept)
                g = self.multiply(g, table[position][PRIME - g[position] - 1])

        powers = {index[i]: reduce(self.powers[i]) for i in kept}
        commutators = {}
        for a, i in enumerate(kept):
            for j in kept[a + 1:]:
                rhs = self.commutators.get((j, i))
                if rhs:
                    commutators[(index[j], index[i])] = reduce(rhs)
        weights = tuple(self.weights[i] for i in kept) if self.weights else None
        definitions = None
        if self.definitions is not None:
            definitions = [self._reindex_definition(self.definitions[i], index) for i in kept]
            if any(d == () for d in definitions):
                definitions = None
        return PcGroup(len(kept), powers, commutators, weights=weights, definitions=definitions), reduce

    @staticmethod
    def _reindex_definition(definition: Optional[Definition], index: dict) -> Optional[Definition]:
        # () marks a definition through a dropped generator
        if definition is None or definition[0] == "image":
            return definition
        refs = definition[1:]
        if not all(r in index for r in refs):
            return ()
        return (definition[0],) + tuple(index[r] for r in refs)

    def find_definitions(self) -> list[Optional[Definition]]:
        """
        Definitions of the non-minimal generators, searched by fixpoint

        A generator a_k is defined by a relation whose left side only uses
        known generators and whose right side is u a_k with u known.
        """
        if self.definitions is not None:
            return [None if d is not None and d[0] == "image" else d for d in self.definitions]
        _, _, free = self._frattini_data()
        known = set(free)
        definitions: list[Optional[Definition]] = [None] * self.num_gens
        relations = [(("power", i), (i,), self.powers[i]) for i in range(self.num_gens)]
        relations += [(("commutator", j, i), (j, i), rhs) for (j, i), rhs in sorted(self.commutators.items())]
        progress = True
        while progress and len(known) < self.num_gens:
            progress = False
            for definition, lhs, rhs in relations:
                if not all(g in known for g in lhs):
                    continue
                unknown = [k for k, e in enumerate(rhs) if e and k not in known]
                if len(unknown) == 1 and rhs[unknown[0]] == 1 and not any(rhs[unknown[0] + 1:]):
                    definitions[unknown[0]] = definition
                    known.add(unknown[0])
                    progress = True
        if len(known) < self.num_gens:
            raise PresentationError("could not find definitions for every pc generator")
        return definitions


class GeneratorRecipes:
    """
    Straight-line programs expressing every pc generator of a group in a
    generating tuple, so a homomorphism can be evaluated from tuple images.
    """

    def __init__(self, group: PcGroup, gens: Sequence[Element]):
        self.group = group
        self.size = len(gens)
        self._ops: list[tuple] = []
        table: dict[int, tuple[Element, int, Element, int]] = {}
        queue = [(g, self._op(("in", t))) for t, g in enumerate(gens)]
        while queue:
            g, node = queue.pop()
            r, node = self._sift(g, node, table)
            lead = _lead(r)
            if lead < 0:
                continue
            if r[lead] != 1:
                r = group.multiply(r, r)
                node = self._op(("pow", node, 2))
            others = [(entry[0], entry[1]) for entry in table.values()]
            table[lead] = (r, node, group.multiply(r, r), self._op(("pow", node, 2)))
            queue.append((group.power(r, PRIME), self._op(("pow", node, PRIME))))
            for h, hnode in others:
                queue.append((group.commutator(r, h), self._op(("comm", node, hnode))))

        self.generates = len(table) == group.num_gens
        self.generator_nodes: list[int] = []
        if self.generates:
            for k in range(group.num_gens):
                self.generator_nodes.append(self._express(group.generator(k), table))
        self._needed = self._reachable(self.generator_nodes)

    def _op(self, op: tuple) -> int:
        self._ops.append(op)
        return len(self._ops) - 1

    def _sift(self, g: Element, node: int, table: dict) -> tuple[Element, int]:
        group = self.group
        while True:
            lead = _lead(g)
            if lead < 0 or lead not in table:
                return g, node
            h, hnode, h2, h2node = table[lead]
            if g[lead] == 1:
                g, node = group.multiply(g, h2), self._op(("mul", node, h2node))
            else:
                g, node = group.multiply(g, h), self._op(("mul", node, hnode))

    def _express(self, g: Element, table: dict) -> int:
        # g * M = 1 after sifting, so g = M^-1
        group = self.group
        factors = None
        while True:
            lead = _lead(g)
            if lead < 0:
                break
            h, hnode, h2, h2node = table[lead]
            use, unode = (h2, h2node) if g[lead] == 1 else (h, hnode)
            g = group.multiply(g, use)
            factors = unode if factors is None else self._op(("mul", factors, unode))
        return self._op(("inv", factors))

    def _reachable(self, roots: list[int]) -> list[int]:
        seen = set()
        stack = list(roots)
        while stack:
            idx = stack.pop()
            if idx in seen:
                continue
            seen.add(idx)
            op = self._ops[idx]
            if op[0] in ("mul", "comm"):
                stack.extend((op[1], op[2]))
            elif op[0] in ("pow", "inv"):
                stack.append(op[1])
        return sorted(seen)

    def evaluate(self, target: PcGroup, images: Sequence[Element]) -> list[Element]:
        """Images of the pc generators given images of the tuple"""
        values: dict[int, Element] = {}
        for idx in self._needed:
            op = self._ops[idx]
            kind = op[0]
            if kind == "in":
                values[idx] = images[op[1]]
            elif kind == "mul":
                values[idx] = target.multiply(values[op[1]], values[op[2]])
            elif kind == "pow":
                values[idx] = target.power(values[op[1]], op[2])
            elif kind == "inv":
                values[idx] = target.inverse(values[op[1]])
            else:
                values[idx] = target.commutator(values[op[1]], values[op[2]])
        return [values[node] for node in self.generator_nodes]


def homomorphism_from_images(
    source: PcGroup,
    gens: Sequence[Element],
    targets: Sequence[Element],
    target: PcGroup,
    recipes: Optional[GeneratorRecipes] = None,
) -> Optional[list[Element]]:
    """
    Decide whether gens[t] -> targets[t] extends to a homomorphism

    Returns:
        Images of the pc generators of source, or None
    """
    recipes = recipes or GeneratorRecipes(source, gens)
    if not recipes.generates:
        return None
    images = recipes.evaluate(target, targets)
    if not source.pc_relations_hold(images, target):
        return None
    for g, expected in zip(gens, targets):
        if target.evaluate_normal(g, images) != expected:
            return None
    return images


def generates(group: PcGroup, elements: Sequence[Element]) -> bool:
    """True iff the elements span the Frattini quotient"""
    data = group._frattini_data()
    vectors = [group.frattini_image(g, data) for g in elements]
    return rank_mod_p(vectors) == len(data[2])


def rank_mod_p(vectors: Sequence[Sequence[int]]) -> int:
    rows = [list(v) for v in vectors]
    rank = 0
    width = len(rows[0]) if rows else 0
    for col in range(width):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] % PRIME), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = pow(rows[rank][col], -1, PRIME)
        rows[rank] = [(v * inv) % PRIME for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col] % PRIME:
                factor = rows[r][col]
                rows[r] = [(a - factor * b) % PRIME for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def generator_respecting_isomorphic(a: PcGroup, a_gens: Sequence[Element],
                                    b: PcGroup, b_gens: Sequence[Element]) -> bool:
    """
    True iff a_gens[t] -> b_gens[t] is an isomorphism

    Works at any order: equal orders plus a surjective homomorphism.
    """
    if a.order != b.order:
        return False
    if not generates(b, b_gens):
        return False
    return homomorphism_from_images(a, a_gens, b_gens, b) is not None


def fingerprint(group: PcGroup, with_orders: bool = True) -> tuple:
    """Isomorphism invariants used to rule out isomorphisms cheaply"""
    maxima = tuple(sorted(group.abelian_invariants(m) for m in group.maximal_subgroups()))
    parts = (
        group.order,
        group.nilpotency_class(),
        group.p_class(),
        group.abelian_invariants(),
        maxima,
    )
    if with_orders:
        histogram = Counter(group.element_order(g) for g in group.elements())
        parts += (tuple(sorted(histogram.items())),)
    return parts


def image_tuples(source: PcGroup, gens: Sequence[Element], target: PcGroup) -> Iterator[tuple[Element, ...]]:
    """
    Candidate images of a minimal generating tuple, pruned by element
    orders of generators, pairwise products and commutators, and
    independence modulo the Frattini subgroup.
    """
    data = target._frattini_data()
    elements = list(target.elements())
    orders = {g: target.element_order(g) for g in elements}
    fimg = {g: target.frattini_image(g, data) for g in elements}
    want = [source.element_order(g) for g in gens]
    pair_product = {}
    pair_comm = {}
    for j in range(len(gens)):
        for i in range(j + 1, len(gens)):
            pair_product[(j, i)] = source.element_order(source.multiply(gens[j], gens[i]))
            pair_comm[(j, i)] = source.element_order(source.commutator(gens[j], gens[i]))
    pools = [[g for g in elements if orders[g] == want[i] and any(fimg[g])] for i in range(len(gens))]

    def extend(chosen: list[Element]) -> Iterator[tuple[Element, ...]]:
        i = len(chosen)
        if i == len(gens):
            yield tuple(chosen)
            return
        for c in pools[i]:
            if rank_mod_p([fimg[x] for x in chosen] + [fimg[c]]) != i + 1:
                continue
            ok = True
            for j, prev in enumerate(chosen):
                if target.element_order(target.multiply(prev, c)) != pair_product[(j, i)]:
                    ok = False
                    break
                if target.element_order(target.commutator(prev, c)) != pair_comm[(j, i)]:
                    ok = False
                    break
            if ok:
                yield from extend(chosen + [c])

    yield from extend([])


def isomorphic(a: PcGroup, b: PcGroup, cap: Optional[int] = None) -> bool:
    """
    Exact isomorphism test by generating-tuple image search

    Args:
        a, b: Groups to compare
        cap: Largest order searched (default from settings, 3^7)
    """
    from services.config import get_settings

    cap = cap or get_settings().iso_cap
    if a.order != b.order:
        return False
    if a.key == b.key:
        return True
    if a.order > cap:
        raise ResourceLimitError("isomorphism test order", cap, a.order)
    if fingerprint(a) != fingerprint(b):
        return False
    gens = a.minimal_generators()
    recipes = GeneratorRecipes(a, gens)
    for candidate in image_tuples(a, gens, b):
        if homomorphism_from_images(a, gens, candidate, b, recipes) is not None:
            return True
    return False


def verify_sigma_automorphism(group: PcGroup, x_image: Element, y_image: Element) -> bool:
    """
    True iff x -> x^-1, y -> y^-1 extends to an automorphism of order
    dividing 2 that inverts the abelianization
    """
    gens = (x_image, y_image)
    if not generates(group, gens):
        return False
    targets = tuple(group.inverse(g) for g in gens)
    images = homomorphism_from_images(group, gens, targets, group)
    if images is None:
        return False

    def phi(g: Element) -> Element:
        return group.evaluate_normal(g, images)

    derived = group.derived_subgroup()
    for g in group.generators():
        if phi(phi(g)) != g:
            return False
        if not group.contains(derived, group.multiply(phi(g), g)):
            return False
    return True


# Named groups

def elementary_abelian(d: int) -> PcGroup:
    return PcGroup(d)


def cyclic(k: int) -> PcGroup:
    """Cyclic group of order 3^k"""
    return PcGroup(k, powers={i: {i + 1: 1} for i in range(k - 1)})


def q1() -> PcGroup:
    """x1^3 = x4, x2^3 = x4, [x2,x1] = x3, [x3,x1] = x4, [x3,x2] = x5"""
    return PcGroup(
        5,
        powers={0: {3: 1}, 1: {3: 1}},
        commutators={(1, 0): {2: 1}, (2, 0): {3: 1}, (2, 1): {4: 1}},
    )


def q2() -> PcGroup:
    """
    x2^3 = x4^2, [x2,x1] = x3, [x3,x1] = x4, [x3,x2] = x5

    SmallGroup(243, 6). Putting the power relation on x1 instead gives a
    group with three maximal subgroups of abelianization [3,3,3]; that
    variant is q2_as_printed.
    """
    return PcGroup(
        5,
        powers={1: {3: 2}},
        commutators={(1, 0): {2: 1}, (2, 0): {3: 1}, (2, 1): {4: 1}},
    )


def q2_as_printed() -> PcGroup:
    """x1^3 = x4^2, [x2,x1] = x3, [x3,x1] = x4, [x3,x2] = x5"""
    return PcGroup(
        5,
        powers={0: {3: 2}},
        commutators={(1, 0): {2: 1}, (2, 0): {3: 1}, (2, 1): {4: 1}},
    )


# Text format

_REL = re.compile(r"^\s*(?:g(\d+)\s*\^\s*3|\[\s*g(\d+)\s*,\s*g(\d+)\s*\])\s*=\s*(.*)$")
_SYL = re.compile(r"g(\d+)(?:\^(\d+))?")


def _parse_normal(text: str, n: int) -> dict:
    text = text.strip()
    word: dict[int, int] = {}
    if text in ("", "1"):
        return word
    for token in text.split():
        match = _SYL.fullmatch(token)
        if not match:
            raise PresentationError(f"bad pc word token {token!r}")
        gen = int(match.group(1)) - 1
        if not 0 <= gen < n:
            raise PresentationError(f"generator g{gen + 1} out of range")
        word[gen] = (word.get(gen, 0) + int(match.group(2) or 1)) % PRIME
    return word


def parse_pc(text: str) -> PcGroup:
    """
    Parse 'pc p=3 n=<gens>' followed by 'g<i>^3 = <word>' and
    '[g<j>,g<i>] = <word>' lines; omitted relations are trivial
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    header = re.fullmatch(r"pc\s+p=(\d+)\s+n=(\d+)", lines[0]) if lines else None
    if not header:
        raise PresentationError("pc presentation must start with 'pc p=3 n=<gens>'")
    if int(header.group(1)) != PRIME:
        raise PresentationError("only p=3 is supported")
    n = int(header.group(2))
    powers, commutators = {}, {}
    for line in lines[1:]:
        match = _REL.match(line)
        if not match:
            raise PresentationError(f"cannot parse pc relation {line!r}")
        rhs = _parse_normal(match.group(4), n)
        if match.group(1):
            powers[int(match.group(1)) - 1] = rhs
        else:
            j, i = int(match.group(2)) - 1, int(match.group(3)) - 1
            if j <= i:
                raise PresentationError(f"commutator [g{j + 1},g{i + 1}] must have j > i")
            commutators[(j, i)] = rhs
    return PcGroup(n, powers, commutators)


def format_normal(word: Element) -> str:
    parts = [f"g{k + 1}" if e == 1 else f"g{k + 1}^{e}" for k, e in enumerate(word) if e]
    return " ".join(parts) or "1"


def format_pc(group: PcGroup, header_comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in header_comments]
    lines.append(f"pc p={PRIME} n={group.num_gens}")
    for i, rhs in enumerate(group.powers):
        if any(rhs):
            lines.append(f"g{i + 1}^3 = {format_normal(rhs)}")
    for (j, i), rhs in sorted(group.commutators.items(), key=lambda item: (item[0][1], item[0][0])):
        lines.append(f"[g{j + 1},g{i + 1}] = {format_normal(rhs)}")
    return "\n".join(lines) + "\n"
