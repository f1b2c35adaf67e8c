"""
Immediate Descendants and Constrained Descendant Search

Descendants of a 3-group G of p-class c are quotients P*/U of its
p-covering group by subgroups U of the multiplicator M with U + N = M
and U != M, N the nucleus. Automorphisms of G lifted to P* act on these
subgroups; one subgroup per orbit gives one descendant per isomorphism
class.

The constrained search walks the descendant tree from a root and keeps
only groups whose abelian quotient invariants can still grow into a
target.

Usage:
    from services import pcgroup, pgen

    targets = pgen.identify3grp_constraint()
    result = pgen.descendant_tree(pcgroup.elementary_abelian(2), targets)
    for group in result.groups:
        print(group.order, pgen.aqi_fingerprint(group))
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import structlog
from cachetools import LRUCache, cached
from cachetools.keys import hashkey

from models.constraint_model import AQIConstraint
from services import metrics
from services.abelian import AbelianInvariants
from services.config import get_settings
from services.errors import ResourceLimitError
from services.pcgroup import (
    PRIME,
    Element,
    GeneratorRecipes,
    PcGroup,
    SubgroupRecord,
    homomorphism_from_images,
    image_tuples,
)
from services.pquotient import PCover, p_cover
from services.tracing import traced

logger = structlog.get_logger(__name__)

Matrix = tuple[tuple[int, ...], ...]
Subspace = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Automorphism:
    """Images of the minimal generators and of every pc generator"""

    generator_images: tuple[Element, ...]
    pc_images: tuple[Element, ...]


_aut_cache: LRUCache = LRUCache(maxsize=64)


@cached(_aut_cache, key=lambda group, cap=None: hashkey(group.key))
def automorphism_group(group: PcGroup, cap: Optional[int] = None) -> list[Automorphism]:
    """
    All automorphisms, by brute force over images of a minimal generating tuple

    Raises:
        ResourceLimitError: group order above cap (default settings.aut_cap)
    """
    cap = cap or get_settings().aut_cap
    if group.order > cap:
        raise ResourceLimitError("automorphism group order", cap, group.order)
    gens = group.minimal_generators()
    recipes = GeneratorRecipes(group, gens)
    automorphisms = []
    with metrics.timed("pgen", "automorphism_group"):
        for candidate in image_tuples(group, gens, group):
            images = homomorphism_from_images(group, gens, candidate, group, recipes)
            if images is not None:
                automorphisms.append(Automorphism(tuple(candidate), tuple(images)))
    logger.debug("automorphism_group_computed", order=group.order, size=len(automorphisms))
    return automorphisms


def compose(group: PcGroup, first: Automorphism, second: Automorphism) -> tuple[Element, ...]:
    """Images of the pc generators under 'first, then second'"""
    return tuple(group.evaluate_normal(image, second.pc_images) for image in first.pc_images)


def lift_to_cover(cover: PCover, definitions: Sequence, automorphism: Automorphism) -> tuple[Element, ...]:
    """
    Lift an automorphism of G to its p-covering group through definitions

    Minimal generators map to the zero-padded images; every other
    generator a_k = u^-1 * lhs is rebuilt from its defining relation.
    """
    group_cover = cover.cover
    m = cover.base
    pad = (0,) * (group_cover.num_gens - m)
    images: list[Element] = []
    for k in range(group_cover.num_gens):
        definition = definitions[k]
        if definition is None:
            images.append(automorphism.pc_images[k] + pad)
            continue
        if definition[0] == "power":
            i = definition[1]
            lhs = group_cover.power(images[i], PRIME)
            rhs = group_cover.powers[i]
        else:
            j, i = definition[1], definition[2]
            lhs = group_cover.commutator(images[j], images[i])
            rhs = group_cover.commutators[(j, i)]
        prefix = rhs[:k] + (0,) * (group_cover.num_gens - k)
        images.append(group_cover.multiply(group_cover.inverse(group_cover.evaluate_normal(prefix, images)), lhs))
    return tuple(images)


def multiplicator_matrix(cover: PCover, lifted: Sequence[Element]) -> Matrix:
    """Rows are images of the multiplicator basis in multiplicator coordinates"""
    m = cover.base
    return tuple(tuple(lifted[k][m:]) for k in range(m, cover.cover.num_gens))


def _rref(rows: Sequence[Sequence[int]]) -> Subspace:
    """Reduced row echelon basis, pivot on the first nonzero column"""
    rows = [[v % PRIME for v in row] for row in rows]
    width = len(rows[0]) if rows else 0
    basis: list[list[int]] = []
    for col in range(width):
        pivot = next((r for r in rows if r[col]), None)
        if pivot is None:
            continue
        rows.remove(pivot)
        inv = pow(pivot[col], -1, PRIME)
        pivot = [(v * inv) % PRIME for v in pivot]
        rows = [[(a - r[col] * b) % PRIME for a, b in zip(r, pivot)] for r in rows]
        basis = [[(a - r[col] * b) % PRIME for a, b in zip(r, pivot)] for r in basis]
        basis.append(pivot)
    basis = [r for r in basis if any(r)]
    basis.sort(key=lambda r: next(k for k, v in enumerate(r) if v))
    return tuple(tuple(r) for r in basis)


def subspaces(dimension: int, rank: int) -> list[Subspace]:
    """All subspaces of F_3^dimension of the given rank, in reduced form"""
    result = []
    for pivots in itertools.combinations(range(dimension), rank):
        slots = [(r, c) for r, p in enumerate(pivots) for c in range(p + 1, dimension) if c not in pivots]
        for values in itertools.product(range(PRIME), repeat=len(slots)):
            rows = [[0] * dimension for _ in range(rank)]
            for r, p in enumerate(pivots):
                rows[r][p] = 1
            for (r, c), v in zip(slots, values):
                rows[r][c] = v
            result.append(tuple(tuple(row) for row in rows))
    return result


def _apply(matrix: Matrix, subspace: Subspace) -> Subspace:
    images = []
    for row in subspace:
        image = [0] * len(matrix)
        for coeff, mrow in zip(row, matrix):
            if coeff:
                image = [(a + coeff * b) % PRIME for a, b in zip(image, mrow)]
        images.append(image)
    return _rref(images)


def _span(*parts: Subspace) -> Subspace:
    rows = [row for part in parts for row in part]
    return _rref(rows) if rows else ()


def allowable_subspaces(dimension: int, nucleus: Subspace, step: int) -> list[Subspace]:
    """Subspaces U of codimension step with U + nucleus = everything"""
    return [
        u for u in subspaces(dimension, dimension - step)
        if len(_span(u, nucleus)) == dimension
    ]


def orbit_representatives(candidates: Sequence[Subspace], matrices: Sequence[Matrix]) -> list[Subspace]:
    remaining = set(candidates)
    representatives = []
    for u in sorted(candidates):
        if u not in remaining:
            continue
        representatives.append(u)
        orbit = {u}
        frontier = [u]
        while frontier:
            current = frontier.pop()
            for matrix in matrices:
                image = _apply(matrix, current)
                if image not in orbit:
                    orbit.add(image)
                    frontier.append(image)
        remaining -= orbit
    return representatives


def descendant_from_subspace(cover: PCover, subspace: Subspace) -> PcGroup:
    """P*/U for U given in multiplicator coordinates"""
    m = cover.base
    gens = tuple((0,) * m + row for row in subspace)
    quotient, _ = cover.cover.quotient(SubgroupRecord(gens))
    return quotient


@traced("pgen")
def immediate_descendants(group: PcGroup, order_cap: Optional[int] = None) -> list[PcGroup]:
    """
    One representative per isomorphism class of immediate descendants

    Raises:
        ResourceLimitError: cover or automorphism group beyond caps
    """
    cap = order_cap or get_settings().max_order
    cover = p_cover(group)
    if cover.cover.order > cap:
        raise ResourceLimitError("covering group order", cap, cover.cover.order)
    r = cover.rank
    m = cover.base
    nucleus = _rref([g[m:] for g in cover.nucleus.igs]) if cover.nucleus.igs else ()
    if not nucleus:
        return []

    definitions = cover.cover.find_definitions()
    matrices = sorted({
        multiplicator_matrix(cover, lift_to_cover(cover, definitions, a))
        for a in automorphism_group(group)
    })
    descendants = []
    for step in range(1, len(nucleus) + 1):
        candidates = allowable_subspaces(r, nucleus, step)
        for u in orbit_representatives(candidates, matrices):
            descendants.append(descendant_from_subspace(cover, u))
        metrics.record_counter("pgen", f"allowable_step_{step}", len(candidates))
    logger.info(
        "immediate_descendants_computed",
        order=f"3^{group.num_gens}",
        multiplicator_rank=r,
        nucleus_rank=len(nucleus),
        descendants=len(descendants),
    )
    return descendants


# Constraints and search

def aqi_fingerprint(group: PcGroup) -> tuple[AbelianInvariants, tuple[AbelianInvariants, ...]]:
    """Abelian invariants of the group and, sorted, of its maximal subgroups"""
    maxima = tuple(sorted(group.abelian_invariants(m) for m in group.maximal_subgroups()))
    return group.abelian_invariants(), maxima


def can_refine(fingerprint, constraint: AQIConstraint) -> bool:
    """
    True iff every current invariant is a quotient of its target, with
    maximal subgroups matched to targets by some bijection
    """
    whole, maxima = fingerprint
    if not whole.is_quotient_of(constraint.whole):
        return False
    targets = constraint.maximal
    if len(maxima) != len(targets):
        return False
    return _has_matching(list(maxima), list(targets))


def _has_matching(items: list[AbelianInvariants], targets: list[AbelianInvariants]) -> bool:
    # augmenting paths on the bipartite "is quotient of" graph
    match: dict[int, int] = {}

    def assign(i: int, seen: set) -> bool:
        for t, target in enumerate(targets):
            if t in seen or not items[i].is_quotient_of(target):
                continue
            seen.add(t)
            if t not in match or assign(match[t], seen):
                match[t] = i
                return True
        return False

    return all(assign(i, set()) for i in range(len(items)))


def matches_exactly(fingerprint, constraint: AQIConstraint) -> bool:
    whole, maxima = fingerprint
    return whole == constraint.whole and Counter(maxima) == Counter(constraint.maximal)


def identify3grp_constraint() -> AQIConstraint:
    """Whole [3,3]; maxima [3,9] three times and [3,3,3] once"""
    return AQIConstraint(
        whole=AbelianInvariants((3, 3)),
        maximal=(AbelianInvariants((3, 9)),) * 3 + (AbelianInvariants((3, 3, 3)),),
    )


def higher_constraint() -> AQIConstraint:
    """Whole [3,3]; maxima [3,9] once and [3,3,3] three times"""
    return AQIConstraint(
        whole=AbelianInvariants((3, 3)),
        maximal=(AbelianInvariants((3, 9)),) + (AbelianInvariants((3, 3, 3)),) * 3,
    )


@dataclass
class DescendantNode:
    group: PcGroup
    parent: Optional["DescendantNode"]
    p_class: int
    fingerprint: tuple


@dataclass
class SearchResult:
    groups: list[PcGroup]
    nodes_per_class: dict[int, int] = field(default_factory=dict)
    pruned_per_class: dict[int, int] = field(default_factory=dict)
    terminal_nodes: list[DescendantNode] = field(default_factory=list)


def canonical_key(group: PcGroup) -> tuple:
    whole, maxima = aqi_fingerprint(group)
    return (group.order, group.p_class(), whole, maxima, group.key)


@traced("pgen")
def descendant_tree(
    root: PcGroup,
    constraint: AQIConstraint,
    max_pclass: Optional[int] = None,
    order_cap: Optional[int] = None,
) -> SearchResult:
    """
    Walk descendants of root, pruning nodes that cannot refine to the
    constraint, and collect nodes matching it exactly whose descendants
    all violate it

    Raises:
        ResourceLimitError: p-class above max_pclass or order above cap
    """
    settings = get_settings()
    max_pclass = max_pclass or settings.max_pclass
    cap = order_cap or settings.max_order
    result = SearchResult(groups=[])

    root_fp = aqi_fingerprint(root)
    if not can_refine(root_fp, constraint):
        logger.info("search_root_violates_constraint")
        return result

    stack = [DescendantNode(root, None, root.p_class(), root_fp)]
    while stack:
        node = stack.pop()
        if node.p_class > max_pclass:
            raise ResourceLimitError("descendant p-class", max_pclass, node.p_class)
        result.nodes_per_class[node.p_class] = result.nodes_per_class.get(node.p_class, 0) + 1
        metrics.record_counter("pgen", "nodes_visited")

        children = []
        for child in immediate_descendants(node.group, order_cap=cap):
            fp = aqi_fingerprint(child)
            if can_refine(fp, constraint):
                children.append(DescendantNode(child, node, node.p_class + 1, fp))
            else:
                klass = node.p_class + 1
                result.pruned_per_class[klass] = result.pruned_per_class.get(klass, 0) + 1

        if matches_exactly(node.fingerprint, constraint) and not children:
            result.terminal_nodes.append(node)
            logger.info("terminal_group_found", order=f"3^{node.group.num_gens}", p_class=node.p_class)
            continue
        stack.extend(reversed(children))

    result.terminal_nodes.sort(key=lambda n: canonical_key(n.group))
    result.groups = [n.group for n in result.terminal_nodes]
    return result


def constrained_search(root: PcGroup, constraint: AQIConstraint, **kwargs) -> list[PcGroup]:
    return descendant_tree(root, constraint, **kwargs).groups
