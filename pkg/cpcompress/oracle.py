""" Brute-force equivalence checking between a network and its
abstraction, for instances small enough to enumerate.

Every stable solution of both SRPs is enumerated and the two sets are
matched through the node map. Abstractions with BGP case splits are
matched through every onto assignment of concrete nodes to copies.
"""

from dataclasses import dataclass
from typing import Optional
import logging
import networkx as nx
from cpcompress import srp as srp_core
from cpcompress.protocols import apply_h

logger = logging.getLogger(__name__)

DEFAULT_ORACLE_BOUND = 10


@dataclass(frozen=True)
class Counterexample:
    """ A solution without a partner on the other side. """
    kind: str  # 'loop', 'label' or 'fwd'
    side: str  # 'concrete' or 'abstract'
    solution: srp_core.Solution
    node: Optional[str] = None

    def __str__(self):
        where = f' at {self.node}' if self.node is not None else ''
        return f'unmatched {self.side} solution ({self.kind}){where}'


@dataclass(frozen=True)
class Verdict:
    ok: bool
    concrete_solutions: int
    abstract_solutions: int
    counterexample: Optional[Counterexample] = None


def _node_map(amap, node_map):
    return amap.f if node_map is None else node_map


def _label_mismatch(L, L_hat, amap, node_map):
    h = amap.h.with_node_map(node_map)
    for u in sorted(L.labels):
        if apply_h(h, L.labels[u]) != L_hat.labels.get(node_map[u]):
            return u
    return None


def check_label_equivalence(
        L: srp_core.Solution, L_hat: srp_core.Solution, amap,
        node_map=None) -> bool:
    """ h(L(u)) = L̂(f(u)) for every concrete node u. """
    node_map = _node_map(amap, node_map)
    return _label_mismatch(L, L_hat, amap, node_map) is None


def _fwd_image(L, node_map, u) -> frozenset:
    # Edges inside one block are collapsed by the abstraction:
    return frozenset(
        node_map[v] for _, v in L.fwd_edges.get(u, ())
        if node_map[v] != node_map[u])


def _fwd_mismatch(L, L_hat, node_map):
    for u in sorted(L.labels):
        u_hat = node_map[u]
        expected = frozenset(v for _, v in L_hat.fwd_edges.get(u_hat, ()))
        if _fwd_image(L, node_map, u) != expected:
            return u
    return None


def check_fwd_equivalence(
        L: srp_core.Solution, L_hat: srp_core.Solution, amap, node_map=None) -> bool:
    """ u forwards into v̂ exactly when f(u) forwards to v̂. """
    node_map = _node_map(amap, node_map)
    return _fwd_mismatch(L, L_hat, node_map) is None


def check_choice_equivalence(
        srp: srp_core.SrpInstance, abstract_srp: srp_core.SrpInstance,
        L: srp_core.Solution, L_hat: srp_core.Solution, amap, node_map=None) -> bool:
    """ Offers match through (f, h) in both directions.

    Every concrete offer has its image among the abstract offers, and
    every abstract offer over (û, v̂) is made over every concrete edge
    from u into v̂.
    """
    node_map = _node_map(amap, node_map)
    h = amap.h.with_node_map(node_map)
    for u in sorted(srp.nodes):
        u_hat = node_map[u]
        concrete = {
            ((node_map[e[0]], node_map[e[1]]), apply_h(h, a))
            for e, a in srp_core.choices(srp, L.labels, u)
            if node_map[e[1]] != u_hat}
        abstract = set(srp_core.choices(abstract_srp, L_hat.labels, u_hat))
        if not concrete <= abstract:
            return False
        for (_, v_hat), a_hat in abstract:
            for _, v in srp.topology.out_edges(u):
                if node_map[v] != v_hat:
                    continue
                offered = srp.transfer((u, v), L.labels.get(v))
                if offered is None or apply_h(h, offered) != a_hat:
                    return False
    return True


def _sorted_solutions(solutions) -> list:
    return sorted(solutions, key=lambda s: repr(sorted(s.labels.items())))


def matched_pairs(concrete, abstract, amap):
    """ Yields (L, L̂, node map) for every matching pair of solutions. """
    abstract = _sorted_solutions(abstract)
    for L in _sorted_solutions(concrete):
        for node_map in amap.refinements():
            for L_hat in abstract:
                if _fwd_mismatch(L, L_hat, node_map) is None and _label_mismatch(
                        L, L_hat, amap, node_map) is None:
                    yield L, L_hat, node_map


def _classify(L, abstract, amap) -> Counterexample:
    image = nx.DiGraph()
    image.add_edges_from(
        (amap.f[u], amap.f[v]) for u, v in L.edges() if amap.f[u] != amap.f[v])
    try:
        cycle = nx.find_cycle(image)
        return Counterexample('loop', 'concrete', L, cycle[0][0])
    except nx.NetworkXNoCycle:
        pass
    for L_hat in _sorted_solutions(abstract):
        for node_map in amap.refinements():
            node = _label_mismatch(L, L_hat, amap, node_map)
            if node is None:
                return Counterexample(
                    'fwd', 'concrete', L, _fwd_mismatch(L, L_hat, node_map))
    node = None
    if abstract:
        node = _label_mismatch(L, _sorted_solutions(abstract)[0], amap, amap.f)
    return Counterexample('label', 'concrete', L, node)


def check_cp_equivalence(
        srp: srp_core.SrpInstance, abstract_srp: srp_core.SrpInstance, amap,
        bound: int = DEFAULT_ORACLE_BOUND) -> Verdict:
    """ Matches every stable solution on each side with one on the other.

    Raises `InstanceTooLarge` when either SRP exceeds `bound` nodes.
    """
    concrete = srp_core.enumerate_solutions(srp, bound)
    abstract = srp_core.enumerate_solutions(abstract_srp, bound)
    logger.debug(
        '%d concrete and %d abstract solutions', len(concrete), len(abstract))

    partners = {}
    hit = set()
    for L, L_hat, _ in matched_pairs(concrete, abstract, amap):
        partners.setdefault(L, []).append(L_hat)
        hit.add(L_hat)

    counterexample = None
    for L in _sorted_solutions(concrete):
        if L not in partners:
            counterexample = _classify(L, abstract, amap)
            break
    if counterexample is None:
        for L_hat in _sorted_solutions(abstract):
            if L_hat not in hit:
                counterexample = Counterexample('label', 'abstract', L_hat)
                break
    if counterexample is not None:
        logger.info('oracle: %s', counterexample)
    return Verdict(
        counterexample is None, len(concrete), len(abstract), counterexample)
