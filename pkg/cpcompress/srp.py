""" The stable routing problem (SRP) model.

An SRP instance is a topology with a single destination, a set of route
attributes, the destination's initial attribute, a preference relation
over attributes and a per-edge transfer function. Attributes are plain
hashable values; `None` stands for "no route" (bottom) throughout the
package.

An edge `(u, v)` carries routes from `v` to `u` and traffic from `u` to
`v`, so `transfer((u, v), label_of_v)` is what `u` is offered by `v`.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Mapping
import itertools
import logging
import networkx as nx
from cpcompress.errors import Divergence, InstanceTooLarge

logger = logging.getLogger(__name__)

Edge = tuple[str, str]
Attribute = Hashable

DEFAULT_DIVERGENCE_FACTOR = 2
DEFAULT_ENUMERATION_LIMIT = 10


@dataclass(frozen=True)
class Topology:
    """ A directed graph with a distinguished destination node. """
    nodes: frozenset
    edges: frozenset
    dest: str

    def __post_init__(self):
        object.__setattr__(self, 'nodes', frozenset(self.nodes))
        object.__setattr__(self, 'edges', frozenset(self.edges))
        if self.dest not in self.nodes:
            raise ValueError(f'destination {self.dest!r} is not a node')
        for u, v in self.edges:
            if u not in self.nodes or v not in self.nodes:
                raise ValueError(f'edge ({u!r}, {v!r}) leaves the node set')

    @cached_property
    def _successors(self) -> dict:
        successors = {u: [] for u in self.nodes}
        for u, v in self.edges:
            successors[u].append(v)
        return {u: tuple(sorted(vs)) for u, vs in successors.items()}

    def neighbors(self, u) -> tuple:
        """ Nodes `v` with an edge `(u, v)`, in id order. """
        return self._successors[u]

    def out_edges(self, u) -> tuple:
        """ Edges leaving `u`, in neighbor id order. """
        return tuple((u, v) for v in self._successors[u])

    def graph(self) -> nx.DiGraph:
        """ Returns the topology as a networkx digraph. """
        graph = nx.DiGraph()
        graph.add_nodes_from(self.nodes)
        graph.add_edges_from(self.edges)
        return graph


@dataclass(frozen=True)
class SrpInstance:
    """ An SRP: topology, attribute domain, a_d, preference and transfer.

    `compare(a, b)` is true when `a` is strictly preferred to `b`.
    `constant_transfer` marks domains whose transfer ignores its input
    attribute (static routes); those are exempt from non-spontaneity.
    """
    topology: Topology
    attr_domain: str
    init_attr: Attribute
    compare: Callable[[Attribute, Attribute], bool] = field(repr=False)
    transfer: Callable[[Edge, Attribute], Attribute] = field(repr=False)
    constant_transfer: bool = False

    @property
    def dest(self):
        return self.topology.dest

    @property
    def nodes(self) -> frozenset:
        return self.topology.nodes


class Solution:
    """ A labeling of every node, plus the forwarding edges it induces.

    Two solutions are equal when their labelings are equal.
    """

    def __init__(self, labels: Mapping, fwd_edges: Mapping):
        self.labels = dict(labels)
        self.fwd_edges = {u: frozenset(edges) for u, edges in fwd_edges.items()}

    def _key(self):
        return tuple(sorted(self.labels.items(), key=lambda item: item[0]))

    def __eq__(self, other):
        if not isinstance(other, Solution):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f'Solution({self.labels!r})'

    def edges(self) -> frozenset:
        """ The union of all forwarding edges. """
        return frozenset().union(*self.fwd_edges.values())


def equivalent(srp: SrpInstance, a, b) -> bool:
    """ a ≈ b: neither attribute is preferred to the other. """
    return not srp.compare(a, b) and not srp.compare(b, a)


def validate_well_formed(srp: SrpInstance, samples: Iterable = ()) -> list:
    """ Lists every well-formedness violation of `srp`.

    Checks self-loop freedom, non-spontaneity on every edge (unless the
    domain's transfer is constant) and, over `samples`, that `compare`
    is irreflexive and transitive.
    """
    violations = []
    for u, v in sorted(srp.topology.edges):
        if u == v:
            violations.append(f'self-loop at {u}')
        elif not srp.constant_transfer and srp.transfer((u, v), None) is not None:
            violations.append(f'spontaneous edge ({u}, {v})')
    samples = list(samples)
    for a in samples:
        if srp.compare(a, a):
            violations.append(f'compare is reflexive at {a!r}')
    for a, b, c in itertools.product(samples, repeat=3):
        if srp.compare(a, b) and srp.compare(b, c) and not srp.compare(a, c):
            violations.append(f'compare is not transitive at {a!r}, {b!r}, {c!r}')
            break
    return violations


def choices(srp: SrpInstance, labels: Mapping, u) -> frozenset:
    """ The (edge, attribute) offers `u` receives under `labels`. """
    offers = set()
    for edge in srp.topology.out_edges(u):
        attr = srp.transfer(edge, labels.get(edge[1]))
        if attr is not None:
            offers.add((edge, attr))
    return frozenset(offers)


def attrs(srp: SrpInstance, labels: Mapping, u) -> frozenset:
    """ The attributes offered to `u` under `labels`. """
    return frozenset(attr for _, attr in choices(srp, labels, u))


def _minimal(srp: SrpInstance, offers) -> list:
    """ Offers whose attribute no other offer beats. """
    offers = list(offers)
    return [
        (edge, attr) for edge, attr in offers
        if not any(srp.compare(other, attr) for _, other in offers)]


def fwd(srp: SrpInstance, labels: Mapping, u) -> frozenset:
    """ Edges whose offer is ≈ to the label `u` settled on. """
    label = labels.get(u)
    if label is None or u == srp.dest:
        return frozenset()
    return frozenset(
        edge for edge, attr in choices(srp, labels, u)
        if equivalent(srp, attr, label))


def _locally_stable(srp: SrpInstance, labels: Mapping, u) -> bool:
    if u == srp.dest:
        return labels.get(u) == srp.init_attr
    offers = choices(srp, labels, u)
    label = labels.get(u)
    if label is None:
        return not offers
    if label not in {attr for _, attr in offers}:
        return False
    return not any(srp.compare(attr, label) for _, attr in offers)


def is_stable(srp: SrpInstance, labels: Mapping) -> bool:
    """ True iff `labels` is a stable solution of `srp`. """
    return all(_locally_stable(srp, labels, u) for u in srp.nodes)


def make_solution(srp: SrpInstance, labels: Mapping) -> Solution:
    """ Wraps a labeling with its forwarding edges. """
    labels = {u: labels.get(u) for u in srp.nodes}
    return Solution(labels, {u: fwd(srp, labels, u) for u in srp.nodes})


def lowest_id(ids):
    """ Tie-break preferring the lowest neighbor id. """
    return sorted(ids)


def highest_id(ids):
    """ Tie-break preferring the highest neighbor id. """
    return sorted(ids, reverse=True)


def simulate_solution(
        srp: SrpInstance, tie_break=lowest_id,
        factor: int = DEFAULT_DIVERGENCE_FACTOR) -> Solution:
    """ Finds one stable solution by round-robin fixed-point iteration.

    Each round visits the non-destination nodes in id order and moves
    each to its best offer. A node keeps its current label while that
    label is still among its best offers; otherwise it takes the best
    offer from the neighbor `tie_break` ranks first. Raises `Divergence`
    after `factor * |V| * |attributes seen|` rounds without a fixed point.
    """
    labels = {u: None for u in srp.nodes}
    labels[srp.dest] = srp.init_attr
    observed = {srp.init_attr}
    others = sorted(srp.nodes - {srp.dest})
    rounds = 0
    while True:
        changed = False
        for u in others:
            best = _minimal(srp, choices(srp, labels, u))
            current = labels[u]
            if current is not None and any(attr == current for _, attr in best):
                continue
            if not best:
                new = None
            else:
                by_neighbor = {}
                for (_, v), attr in best:
                    by_neighbor.setdefault(v, attr)
                new = by_neighbor[tie_break(list(by_neighbor))[0]]
                observed.add(new)
            if new != current:
                labels[u] = new
                changed = True
        rounds += 1
        if not changed:
            break
        bound = factor * len(srp.nodes) * max(1, len(observed))
        if rounds >= bound:
            logger.debug('gave up after %d rounds', rounds)
            raise Divergence(bound, factor)
    logger.debug('converged after %d rounds', rounds)
    return make_solution(srp, labels)


def _search_order(srp: SrpInstance) -> list:
    """ Non-destination nodes, nearest to the destination first. """
    distance = nx.single_source_shortest_path_length(
        srp.topology.graph().reverse(copy=False), srp.dest)
    unreachable = len(srp.nodes) + 1
    return sorted(
        srp.nodes - {srp.dest},
        key=lambda u: (distance.get(u, unreachable), u))


def _enumerate_constant(srp: SrpInstance):
    """ Solutions of a domain whose offers don't depend on labels. """
    empty = {u: None for u in srp.nodes}
    others = sorted(srp.nodes - {srp.dest})
    options = []
    for u in others:
        best = {attr for _, attr in _minimal(srp, choices(srp, empty, u))}
        options.append(sorted(best, key=repr) or [None])
    for picked in itertools.product(*options):
        labels = dict(zip(others, picked))
        labels[srp.dest] = srp.init_attr
        if is_stable(srp, labels):
            yield labels


def _enumerate_derivations(srp: SrpInstance):
    """ Stable labelings, by choosing a next hop (or none) per node.

    Every stable labeling of a non-spontaneous domain is derived along
    an acyclic choice of next hops, so the search only grows derivation
    forests rooted at the destination and prunes as soon as a node with
    all neighbors labeled turns out unstable.
    """
    order = _search_order(srp)
    topology = srp.topology
    sigma = {}
    labels = {srp.dest: srp.init_attr}

    def settle():
        """ Labels every assigned node whose next hop is labeled. """
        settled = []
        progress = True
        while progress:
            progress = False
            for u, v in sigma.items():
                if u in labels:
                    continue
                if v is None:
                    labels[u] = None
                elif v in labels:
                    attr = srp.transfer((u, v), labels[v])
                    if attr is None:
                        return settled, False
                    labels[u] = attr
                else:
                    continue
                settled.append(u)
                progress = True
        return settled, True

    def consistent(settled) -> bool:
        touched = set(settled)
        for u in settled:
            touched.update(topology.neighbors(u))
        for u in touched:
            if u in labels and all(v in labels for v in topology.neighbors(u)):
                if not _locally_stable(srp, labels, u):
                    return False
        return True

    def cyclic(u) -> bool:
        seen = {u}
        v = sigma.get(u)
        while v is not None and v in sigma:
            if v in seen:
                return True
            seen.add(v)
            v = sigma[v]
        return False

    def search(index):
        if index == len(order):
            if is_stable(srp, labels):
                yield dict(labels)
            return
        u = order[index]
        for v in (None,) + topology.neighbors(u):
            sigma[u] = v
            if v is None or not cyclic(u):
                settled, ok = settle()
                if ok and consistent(settled):
                    yield from search(index + 1)
                for w in settled:
                    del labels[w]
            del sigma[u]

    yield from search(0)


def enumerate_solutions(
        srp: SrpInstance,
        max_nodes: int = DEFAULT_ENUMERATION_LIMIT) -> frozenset:
    """ Returns every stable solution of `srp`.

    Exponential in the number of nodes; raises `InstanceTooLarge` above
    `max_nodes`.
    """
    if len(srp.nodes) > max_nodes:
        raise InstanceTooLarge(len(srp.nodes), max_nodes)
    if srp.constant_transfer:
        labelings = _enumerate_constant(srp)
    else:
        labelings = _enumerate_derivations(srp)
    solutions = frozenset(make_solution(srp, labels) for labels in labelings)
    logger.debug('%d stable solutions', len(solutions))
    return solutions


def forwarding_graph(solution: Solution) -> nx.DiGraph:
    """ The forwarding edges of `solution` as a networkx digraph. """
    graph = nx.DiGraph()
    graph.add_nodes_from(solution.labels)
    graph.add_edges_from(solution.edges())
    return graph


def is_rooted_dag(srp: SrpInstance, solution: Solution) -> bool:
    """ True iff forwarding is acyclic and every routed node reaches d. """
    graph = forwarding_graph(solution)
    if not nx.is_directed_acyclic_graph(graph):
        return False
    reaching = nx.ancestors(graph, srp.dest) | {srp.dest}
    return all(
        u in reaching for u, label in solution.labels.items()
        if label is not None)
