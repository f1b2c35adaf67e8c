"""
p-Quotient Algorithm and p-Covering Groups (p = 3)

Builds the maximal exponent-3-class-c quotient of a finitely presented
group one layer at a time:

1. Tails: every non-defining pc relation gets a fresh central generator;
   presentation generators that are not pc generators get an image tail.
2. Consistency: the standard test words give linear relations on tails.
3. Relators: each relator evaluated in the tails group lands in the tails.
4. Elimination over F_3; surviving tails become the next layer.

The layer is empty exactly when the pro-3 group is finite and has been
reached.

Usage:
    from services import fpgroup, pquotient

    result = pquotient.p_quotient(fpgroup.gn_presentation(1), max_class=10)
    assert result.stabilized and result.quotient.order == 3**5

    cover = pquotient.p_cover(result.quotient)
    print(cover.rank)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import structlog
from cachetools import LRUCache, cached
from cachetools.keys import hashkey

from services import metrics
from services.config import get_settings
from services.errors import ConsistencyError, ResourceLimitError
from services.fpgroup import Presentation, Word, format_presentation, gn_presentation, hn_presentation
from services.pcgroup import (
    PRIME,
    Element,
    PcGroup,
    SubgroupRecord,
    format_pc,
    generator_respecting_isomorphic,
)
from services.tracing import add_span_attribute, add_span_event, traced

logger = structlog.get_logger(__name__)


class _Eliminator:
    """Row space over F_3, fully reduced, pivoting on the last nonzero column"""

    def __init__(self, width: int):
        self.width = width
        self.rows: dict[int, list[int]] = {}

    def add(self, vector: Sequence[int]) -> bool:
        v = [x % PRIME for x in vector]
        for pivot, row in self.rows.items():
            c = v[pivot]
            if c:
                v = [(a - c * b) % PRIME for a, b in zip(v, row)]
        pivot = next((k for k in range(self.width - 1, -1, -1) if v[k]), -1)
        if pivot < 0:
            return False
        inv = pow(v[pivot], -1, PRIME)
        v = [(a * inv) % PRIME for a in v]
        for other, row in self.rows.items():
            c = row[pivot]
            if c:
                self.rows[other] = [(a - c * b) % PRIME for a, b in zip(row, v)]
        self.rows[pivot] = v
        return True

    @property
    def rank(self) -> int:
        return len(self.rows)

    def free_columns(self) -> list[int]:
        return [k for k in range(self.width) if k not in self.rows]

    def express(self, column: int, free: Sequence[int]) -> tuple[int, ...]:
        """Column variable as a combination of the free columns"""
        if column not in self.rows:
            return tuple(1 if f == column else 0 for f in free)
        row = self.rows[column]
        return tuple((-row[f]) % PRIME for f in free)


@dataclass
class _Layer:
    group: PcGroup
    images: tuple[Element, ...]
    added: int
    relation_rank: int


def _relation_labels(group: PcGroup, definitions: Sequence) -> list[tuple]:
    defined = {d for d in definitions if d is not None and d[0] != "image"}
    m = group.num_gens
    labels = [("power", i) for i in range(m) if ("power", i) not in defined]
    labels += [
        ("commutator", j, i)
        for i in range(m)
        for j in range(i + 1, m)
        if ("commutator", j, i) not in defined
    ]
    return labels


def _tails_group(group: PcGroup, labels: list[tuple], image_tails: int) -> PcGroup:
    m = group.num_gens
    pad = (0,) * (len(labels) + image_tails)
    powers = {i: list(group.powers[i] + pad) for i in range(m)}
    commutators = {key: list(rhs + pad) for key, rhs in group.commutators.items()}
    for s, label in enumerate(labels):
        if label[0] == "power":
            powers[label[1]][m + s] = 1
        else:
            key = (label[1], label[2])
            commutators.setdefault(key, [0] * (m + len(pad)))[m + s] = 1
    return PcGroup(
        m + len(pad),
        {i: tuple(v) for i, v in powers.items()},
        {k: tuple(v) for k, v in commutators.items()},
    )


def _next_layer(
    group: PcGroup,
    definitions: Sequence,
    weights: Sequence[int],
    new_weight: int,
    relators: Sequence[Word] = (),
    images: Sequence[Element] = (),
    dependent: Sequence[int] = (),
) -> _Layer:
    """
    Extend group by the largest central elementary abelian layer compatible
    with consistency and the relators

    Without relators this is the p-covering group.
    """
    m = group.num_gens
    labels = _relation_labels(group, definitions)
    t, u = len(labels), len(dependent)
    tails = _tails_group(group, labels, u)
    elim = _Eliminator(t + u)

    checks = 0
    for label, left, right in tails.consistency_pairs(upto=m):
        if left[:m] != right[:m]:
            raise ConsistencyError(f"consistency test {label} fails below the tails")
        elim.add([a - b for a, b in zip(left[m:], right[m:])])
        checks += 1
    relation_rank = t - elim.rank

    if relators:
        lifted = []
        image_slot = {k: pos for pos, k in enumerate(dependent)}
        for k, image in enumerate(images):
            g = list(image + (0,) * (t + u))
            if k in image_slot:
                g[m + t + image_slot[k]] = 1
            lifted.append(tuple(g))
        for r in relators:
            value = tails.evaluate(r, lifted)
            if any(value[:m]):
                raise ConsistencyError("relator does not vanish in the previous quotient")
            elim.add(value[m:])

    free = elim.free_columns()
    if any(f >= t for f in free):
        raise ConsistencyError("image of a presentation generator is not determined")
    s = len(free)

    column = {label: k for k, label in enumerate(labels)}
    zeros = (0,) * s
    powers = {}
    for i in range(m):
        k = column.get(("power", i))
        powers[i] = group.powers[i] + (elim.express(k, free) if k is not None else zeros)
    commutators = {}
    for i in range(m):
        for j in range(i + 1, m):
            k = column.get(("commutator", j, i))
            rhs = group.commutators.get((j, i), group.identity)
            commutators[(j, i)] = rhs + (elim.express(k, free) if k is not None else zeros)
    new_definitions = list(definitions) + [labels[f] for f in free]
    new_weights = list(weights) + [new_weight] * s
    extended = PcGroup(m + s, powers, commutators, weights=new_weights, definitions=new_definitions)

    new_images = []
    for k, image in enumerate(images):
        if k in dependent:
            new_images.append(image + elim.express(t + list(dependent).index(k), free))
        else:
            new_images.append(image + zeros)

    metrics.record_counter("pquotient", "consistency_checks", checks)
    logger.debug(
        "layer_computed",
        base_gens=m,
        tails=t,
        image_tails=u,
        added=s,
        weight=new_weight,
    )
    return _Layer(extended, tuple(new_images), s, relation_rank)


def _class_one(presentation: Presentation):
    g = presentation.num_gens
    elim = _Eliminator(g)
    for r in presentation.relators:
        elim.add(r.exponent_sums(g))
    free = elim.free_columns()
    d = len(free)
    images = tuple(elim.express(k, free) for k in range(g))
    dependent = tuple(k for k in range(g) if k not in free)
    group = PcGroup(d, weights=[1] * d, definitions=[("image", k) for k in free])
    return group, images, dependent


@dataclass
class PQuotientResult:
    """Maximal class-c 3-quotient with the epimorphism from the presentation"""

    quotient: PcGroup
    epimorphism: tuple[Element, ...]
    p_class: int
    stabilized: bool
    presentation: Presentation
    orders: tuple[int, ...] = field(default_factory=tuple)

    def image(self, word: Word) -> Element:
        return self.quotient.evaluate(word, self.epimorphism)

    def relators_vanish(self, relators: Optional[Sequence[Word]] = None) -> bool:
        relators = self.presentation.relators if relators is None else relators
        return all(not any(self.image(r)) for r in relators)

    def provenance(self) -> list[str]:
        lines = ["computed by p-quotient from presentation:"]
        lines += ["  " + line for line in format_presentation(self.presentation).splitlines()]
        lines.append(f"p-class {self.p_class}, stabilized {str(self.stabilized).lower()}")
        return lines

    def format(self) -> str:
        return format_pc(self.quotient, self.provenance())


def _log3(n: int) -> int:
    k = 0
    while n >= PRIME:
        n //= PRIME
        k += 1
    return k


@traced("pquotient")
def p_quotient(presentation: Presentation, max_class: int, order_cap: Optional[int] = None) -> PQuotientResult:
    """
    Maximal quotient of exponent-3 class <= max_class

    Args:
        presentation: Finite presentation, relators freely reduced
        max_class: Largest class computed; one more layer is computed to
            decide stabilization
        order_cap: Largest quotient order allowed (default settings.max_order)

    Returns:
        PQuotientResult; stabilized means that extra layer was empty

    Raises:
        ResourceLimitError: a quotient exceeds the order cap
    """
    if max_class < 1:
        raise ValueError("max_class must be at least 1")
    cap = order_cap or get_settings().max_order
    max_gens = _log3(cap)

    group, images, dependent = _class_one(presentation)
    orders = [group.order]
    p_class = 1 if group.num_gens else 0
    stabilized = group.num_gens == 0
    if group.num_gens > max_gens:
        raise ResourceLimitError("quotient order", cap, group.order)

    while not stabilized:
        with metrics.timed("pquotient", f"class_{p_class + 1}"):
            layer = _next_layer(
                group,
                group.definitions,
                group.weights,
                p_class + 1,
                presentation.relators,
                images,
                dependent,
            )
        if layer.added == 0:
            stabilized = True
            break
        if p_class >= max_class:
            break
        if layer.group.num_gens > max_gens:
            raise ResourceLimitError("quotient order", cap, layer.group.order)
        group, images = layer.group, layer.images
        p_class += 1
        orders.append(group.order)
        logger.info("pquotient_class_computed", p_class=p_class, order=f"3^{group.num_gens}")
        add_span_event("class_step", {"p_class": p_class, "generators": group.num_gens})

    add_span_attribute("order", f"3^{group.num_gens}")
    return PQuotientResult(group, tuple(images), p_class, stabilized, presentation, tuple(orders))


@dataclass
class PCover:
    """p-covering group with its multiplicator and nucleus"""

    cover: PcGroup
    multiplicator: SubgroupRecord
    nucleus: SubgroupRecord
    base: int

    @property
    def rank(self) -> int:
        return len(self.multiplicator)


_cover_cache: LRUCache = LRUCache(maxsize=128)


@cached(_cover_cache, key=lambda group: hashkey(group.key, group.definitions))
def p_cover(group: PcGroup) -> PCover:
    """
    p-covering group of a consistent pc group

    New generators are defined by the non-defining relations they tail;
    generators without a definition are the minimal generators.
    """
    definitions = group.find_definitions()
    weights = group.weights or tuple(_weights_from_series(group))
    c = max(weights) if weights else 0
    layer = _next_layer(group, definitions, weights, c + 1)
    cover = layer.group
    m = group.num_gens
    multiplicator = SubgroupRecord(tuple(cover.generator(k) for k in range(m, cover.num_gens)))
    series = cover.lower_p_central_series()
    nucleus = series[c] if c < len(series) else cover.trivial()
    logger.debug("p_cover_computed", base=m, multiplicator_rank=layer.added, nucleus_rank=len(nucleus))
    return PCover(cover, multiplicator, nucleus, m)


def _weights_from_series(group: PcGroup) -> list[int]:
    """Weight of a_i: largest k with a_i a lead of P_k"""
    weights = [1] * group.num_gens
    for k, term in enumerate(group.lower_p_central_series(), start=1):
        for lead in term.leads:
            weights[lead] = k
    return weights


def relation_rank(group: PcGroup) -> int:
    """dim H^2(G, F_3), the rank of the p-multiplicator"""
    return p_cover(group).rank


def schur_multiplier_rank(group: PcGroup) -> int:
    """Rank of the Schur multiplier: relation rank minus generator rank"""
    return relation_rank(group) - group.generator_rank()


@dataclass
class Lemma1Check:
    n: int
    gn_order: int
    hn_order: int
    kernel_order: int
    kernel_central: bool
    quotient_matches: bool

    @property
    def passed(self) -> bool:
        return (
            self.kernel_order == PRIME
            and self.kernel_central
            and self.quotient_matches
            and self.gn_order == PRIME * self.hn_order
        )


def lemma1_check(n: int, max_class: Optional[int] = None) -> Lemma1Check:
    """
    Compare G_n modulo the normal closure of x^3 with H_n

    The kernel must be central of order 3 and the quotient map must send
    the generators of G_n to those of H_n.
    """
    max_class = max_class or 2 * n + 3
    gn = p_quotient(gn_presentation(n), max_class)
    hn = p_quotient(hn_presentation(n), max_class)
    g = gn.quotient
    x, y = gn.epimorphism
    kernel = g.normal_closure([g.power(x, PRIME)])
    central = all(
        not any(g.commutator(k, a)) for k in kernel.igs for a in g.generators()
    )
    quotient, project = g.quotient(kernel)
    matches = generator_respecting_isomorphic(
        hn.quotient, hn.epimorphism, quotient, (project(x), project(y))
    )
    return Lemma1Check(n, g.order, hn.quotient.order, kernel.order, central, matches)
