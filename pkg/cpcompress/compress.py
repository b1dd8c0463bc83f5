""" Abstraction refinement: computes a small network with the same
stable routing behavior as a concrete one, for one destination.

The refinement starts from the coarsest partition (the destination
alone, everything else together) and splits blocks until every block's
members see the same transfer functions towards the same neighbor
blocks, and no node reaches one block over differently configured
edges. When BGP local preference varies, neighbors are compared
concretely instead and each block is then split into one copy per
local-preference value it can assign.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional
import itertools
import logging
import random
import time
from cpcompress import protocols as proto
from cpcompress.bdd import BddManager, VarLayout, compile_policy
from cpcompress.ecs import DestEquivClass, SrpFactory, specialize_spec
from cpcompress.errors import CertificateMissing
from cpcompress.network import (
    Interface, Link, MappingRecord, NetworkSpec, Node, StaticRoute)
from cpcompress.protocols import AbstractionKind, AttrAbstraction, Protocol

logger = logging.getLogger(__name__)

COPY_SEPARATOR = '~'
DEFAULT_RANK_SAMPLES = 64


class Mode(str, Enum):
    """ Which topological abstraction condition a map satisfies. """
    FORALL_EXISTS = 'forall_exists'
    FORALL_FORALL = 'forall_forall'


class Partition:
    """ Union-split-find over node ids.

    Blocks only ever split. When a block splits, its largest fragment
    keeps the block id and the other fragments get fresh ids.
    """

    def __init__(self, nodes):
        nodes = sorted(nodes)
        self._block_of = {u: 0 for u in nodes}
        self._members = {0: set(nodes)}
        self._next_id = 1
        self.generation = 0

    def __len__(self):
        return len(self._members)

    def find(self, u) -> int:
        return self._block_of[u]

    def members(self, block: int) -> frozenset:
        return frozenset(self._members[block])

    def block_ids(self) -> list:
        """ Current block ids, oldest first. """
        return sorted(self._members)

    def blocks(self) -> list:
        return [self.members(block) for block in self.block_ids()]

    def split_block(self, block: int, groups) -> list:
        """ Replaces `block` by `groups`, which must partition it. """
        groups = [sorted(group) for group in groups if group]
        if sum(len(group) for group in groups) != len(self._members[block]):
            raise ValueError(f'groups do not partition block {block}')
        if len(groups) <= 1:
            return [block]
        groups.sort(key=lambda group: group[0])
        keeper = max(range(len(groups)), key=lambda i: (len(groups[i]), -i))
        ids = []
        for index, group in enumerate(groups):
            if index == keeper:
                self._members[block] = set(group)
                ids.append(block)
                continue
            new = self._next_id
            self._next_id += 1
            self._members[new] = set(group)
            for u in group:
                self._block_of[u] = new
            ids.append(new)
        self.generation += 1
        return ids

    def split(self, members) -> int:
        """ Separates `members` (all in one block) from their block. """
        members = set(members)
        block = self.find(next(iter(members)))
        if any(self.find(u) != block for u in members):
            raise ValueError('members span several blocks')
        rest = self._members[block] - members
        ids = self.split_block(block, [members, rest])
        return self.find(next(iter(members))) if len(ids) > 1 else block


class EdgeRelations:
    """ Grouping keys and local preferences for one SRP.

    An edge's key is the pair of compiled policy ids (sender export,
    receiver import with its ACL folded in) plus, where the protocol
    needs them, the OSPF constants or static-route presence. Two edges
    with equal keys transfer every route identically.
    """

    def __init__(self, factory: SrpFactory, dest, protocol):
        self.factory = factory
        self.spec = factory.spec
        self.ec = factory.ec
        self.dest = dest
        self.protocol = Protocol(protocol)
        self.topology = factory.topology(dest, self.protocol)
        unused = self.spec.unused_communities()
        self.manager = BddManager(VarLayout.for_spec(self.spec, drop_unused=bool(unused)))
        if self.protocol is not Protocol.BGP:
            kind = AbstractionKind.IDENTITY
        elif unused:
            kind = AbstractionKind.BGP_DROP_UNUSED_TAGS
        else:
            kind = AbstractionKind.BGP_PATH_RENAME
        self.h = AttrAbstraction(kind, {}, frozenset(unused))
        self._relations = {}
        self.keys = {}
        self.static = {}
        self.dest_area = factory.dest_area(dest)
        for edge in sorted(self.topology.edges):
            self.static[edge] = factory.static_present(*edge)
            self.keys[edge] = self._key(*edge)
        self.prefs = {u: self._prefs(u) for u in sorted(self.topology.nodes)}

    def relation(self, policy_id, acl_id=None) -> int:
        """ The BDD id of a policy (and ACL) for this class (cached). """
        key = (policy_id, acl_id)
        if key not in self._relations:
            rel = compile_policy(
                self.spec.policy(policy_id), self.spec.acl(acl_id), self.ec,
                self.manager, self.protocol)
            self._relations[key] = rel.id
        return self._relations[key]

    def _key(self, u, v) -> tuple:
        if self.protocol is Protocol.STATIC:
            return ('static', self.static[(u, v)], self.factory.acl_permits(u, v))
        receiver = self.spec.interface(u, v)
        sender = self.spec.interface(v, u)
        key = (
            self.relation(sender.export_policy),
            self.relation(receiver.import_policy, receiver.acl))
        if self.protocol is Protocol.OSPF:
            link = self.spec.link(u, v)
            key += (link.ospf_cost, link.ospf_area != self.dest_area)
        return key

    def _prefs(self, u) -> frozenset:
        if self.protocol is not Protocol.BGP:
            return frozenset({proto.DEFAULT_LOCAL_PREF})
        # Only u's own imports can set the preference u ranks by:
        values = {proto.DEFAULT_LOCAL_PREF}
        for v in self.topology.neighbors(u):
            values |= self.factory.edge_policy(u, v, self.protocol).import_.local_prefs()
        return frozenset(values)

    def block_prefs(self, members) -> frozenset:
        return frozenset().union(*(self.prefs[u] for u in members))

    @property
    def needs_case_split(self) -> bool:
        """ True iff some node can assign more than one local preference. """
        return any(len(values) > 1 for values in self.prefs.values())


def prefs(relations: EdgeRelations, nodes) -> frozenset:
    """ Local preferences assignable at a node or a set of nodes. """
    if isinstance(nodes, str):
        nodes = (nodes,)
    return relations.block_prefs(nodes)


def edge_relations(spec: NetworkSpec, ec: DestEquivClass, dest, protocol) -> EdgeRelations:
    return EdgeRelations(specialize_spec(spec, ec), dest, protocol)


@dataclass(frozen=True)
class AbstractionMap:
    """ A node map f with its attribute map h.

    Block ids are the lowest concrete id in the block. Blocks split
    into BGP cases are listed in `copies`; `edges` holds the directed
    edges between blocks (never a block to itself).
    """
    f: Mapping
    h: AttrAbstraction
    mode: Mode
    edges: frozenset
    dest: str
    copies: Mapping = field(default_factory=dict)

    @classmethod
    def from_blocks(
            cls, topology, blocks, h: AttrAbstraction,
            mode: Mode = Mode.FORALL_EXISTS) -> 'AbstractionMap':
        """ The map sending every node to the lowest id of its block. """
        f = {}
        for members in blocks:
            name = min(members)
            for u in members:
                f[u] = name
        edges = frozenset(
            (f[u], f[v]) for u, v in topology.edges if f[u] != f[v])
        return cls(f, h.with_node_map(f), Mode(mode), edges, f[topology.dest])

    @classmethod
    def from_record(cls, record: MappingRecord, abstract: NetworkSpec) -> 'AbstractionMap':
        """ Rebuilds a map from a sidecar and the network it describes. """
        block_of = {copy: block for block, copies in record.copies.items() for copy in copies}
        edges = set()
        for a, b in abstract.edges:
            a, b = block_of.get(a, a), block_of.get(b, b)
            if a != b:
                edges.add((a, b))
        dest_candidates = [
            block_of.get(node, node) for node in abstract.origins]
        mode = Mode.FORALL_FORALL if record.copies else Mode.FORALL_EXISTS
        return cls(
            dict(record.f), record.h.with_node_map(dict(record.f)), mode,
            frozenset(edges), dest_candidates[0] if dest_candidates else None,
            {block: tuple(copies) for block, copies in record.copies.items()})

    def blocks(self) -> dict:
        """ Block id -> concrete members. """
        found = {}
        for u, block in self.f.items():
            found.setdefault(block, set()).add(u)
        return {block: frozenset(members) for block, members in sorted(found.items())}

    def copies_of(self, block) -> tuple:
        return tuple(self.copies.get(block, (block,)))

    @property
    def abstract_nodes(self) -> tuple:
        return tuple(
            copy for block in sorted(set(self.f.values()))
            for copy in self.copies_of(block))

    def split_edges(self) -> frozenset:
        """ Edges between the nodes of the split network. """
        return frozenset(
            (x, y) for a, b in self.edges
            for x in self.copies_of(a) for y in self.copies_of(b))

    def refinements(self):
        """ Every onto assignment of concrete nodes to copies (f_r).

        Unsplit nodes keep their block; the assignments are generated
        in lexicographic order of copy indices.
        """
        blocks = self.blocks()
        split = [block for block in blocks if block in self.copies]
        options = []
        for block in split:
            members = sorted(blocks[block])
            copies = self.copies[block]
            assignments = [
                dict(zip(members, (copies[i] for i in picked)))
                for picked in itertools.product(range(len(copies)), repeat=len(members))
                if len(set(picked)) == len(copies)]
            options.append(assignments)
        for combination in itertools.product(*options):
            node_map = dict(self.f)
            for assignment in combination:
                node_map.update(assignment)
            yield node_map

    def record(self) -> MappingRecord:
        return MappingRecord(
            self.abstract_nodes, dict(sorted(self.f.items())), self.h,
            {block: tuple(copies) for block, copies in sorted(self.copies.items())})


@dataclass(frozen=True)
class Violation:
    condition: str
    detail: str
    node: Optional[str] = None

    def __str__(self):
        where = f' at {self.node}' if self.node is not None else ''
        return f'{self.condition}{where}: {self.detail}'


@dataclass(frozen=True)
class Certificate:
    """ Outcome of checking an abstraction's local conditions. """
    checked: tuple
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class AbstractNetwork:
    """ A compressed network for one (class, destination, protocol). """
    ec: DestEquivClass
    dest: str
    protocol: Protocol
    spec: NetworkSpec
    map: AbstractionMap
    certificate: Certificate
    concrete_size: tuple
    abstract_size: tuple

    @property
    def node_ratio(self) -> float:
        return self.concrete_size[0] / max(1, self.abstract_size[0])

    @property
    def edge_ratio(self) -> float:
        return self.concrete_size[1] / max(1, self.abstract_size[1])


def _neighbor_id(relations, partition, u, v, concrete: bool):
    block = partition.find(v)
    if concrete:
        return v
    # A static route inside a block would become a self-loop:
    if relations.static.get((u, v)) and block == partition.find(u):
        return v
    return block


def signature(relations: EdgeRelations, partition: Partition, u, concrete: bool) -> frozenset:
    """ What `u` sends to and receives from each neighbor (block). """
    entries = set()
    for v in relations.topology.neighbors(u):
        n = _neighbor_id(relations, partition, u, v, concrete)
        entries.add(('out', relations.keys[(u, v)], n))
        entries.add(('in', relations.keys[(v, u)], n))
    return frozenset(entries)


def refine(relations: EdgeRelations, partition: Partition, block: int, num_prefs: int) -> list:
    """ Splits `block` by member signature; returns the resulting ids. """
    # With several preferences in play, neighbors count individually:
    concrete = num_prefs > 1
    groups = {}
    # Members with equal signatures stay together:
    for u in sorted(partition.members(block)):
        groups.setdefault(signature(relations, partition, u, concrete), []).append(u)
    return partition.split_block(block, list(groups.values()))


def separate_targets(relations: EdgeRelations, partition: Partition) -> int:
    """ Splits any neighbor block that one node reaches over edges with
    different keys; returns the number of splits. """
    splits = 0
    topology = relations.topology
    for u in sorted(topology.nodes):
        by_block = {}
        for v in topology.neighbors(u):
            key = (relations.keys[(u, v)], relations.keys[(v, u)])
            by_block.setdefault(partition.find(v), {}).setdefault(key, []).append(v)
        for block, by_key in sorted(by_block.items()):
            if len(by_key) <= 1 or block == partition.find(u):
                continue
            groups = list(by_key.values())
            reached = {v for group in groups for v in group}
            groups.append(partition.members(block) - reached)
            partition.split_block(block, groups)
            splits += 1
    return splits


def split_into_bgp_cases(amap: AbstractionMap, prefs_per_block: Mapping) -> AbstractionMap:
    """ Gives every block one copy per local preference it can assign
    (never more copies than members). """
    blocks = amap.blocks()
    copies = {}
    for block, members in blocks.items():
        count = min(len(prefs_per_block.get(block, ())), len(members))
        if count > 1:
            copies[block] = tuple(f'{block}{COPY_SEPARATOR}{i}' for i in range(count))
    if copies:
        logger.debug('split %d blocks into BGP cases', len(copies))
    return replace(amap, copies=copies)


def find_abstraction(relations: EdgeRelations) -> AbstractionMap:
    """ Refines the coarsest partition until no block splits further. """
    topology = relations.topology
    # Start from the destination alone and everything else together:
    partition = Partition(topology.nodes)
    if len(topology.nodes) > 1:
        partition.split({topology.dest})
    case_split = relations.protocol is Protocol.BGP and relations.needs_case_split
    num_prefs = max(len(values) for values in relations.prefs.values()) if case_split else 1
    rounds = 0
    while True:
        count = len(partition)
        for block in partition.block_ids():
            # Singletons can't split:
            if len(partition.members(block)) <= 1:
                continue
            refine(relations, partition, block, num_prefs)
        separate_targets(relations, partition)
        rounds += 1
        logger.debug('round %d: %d blocks', rounds, len(partition))
        # Stable block count: a fixpoint.
        if len(partition) == count:
            break

    mode = Mode.FORALL_FORALL if case_split else Mode.FORALL_EXISTS
    amap = AbstractionMap.from_blocks(topology, partition.blocks(), relations.h, mode)
    if not case_split:
        return amap
    # One copy per preference a block can assign:
    return split_into_bgp_cases(amap, {
        block: relations.block_prefs(members)
        for block, members in amap.blocks().items()})


def _check_attributes(relations: EdgeRelations, amap: AbstractionMap, samples: int, seed: int):
    """ Drop-, orig- and rank-equivalence of h, over sampled attributes. """
    violations = []
    h = amap.h
    protocol = relations.protocol
    if proto.apply_h(h, None) is not None:
        violations.append(Violation('drop-equivalence', 'h maps no-route to a route'))
    init = proto.init_attr(protocol)
    if proto.apply_h(h, init) != init:
        violations.append(Violation('orig-equivalence', f'h({init!r}) != {init!r}'))

    rng = random.Random(seed)
    attrs = proto.sample_attributes(
        protocol, samples, rng, nodes=relations.topology.nodes,
        lp_values=relations.block_prefs(relations.topology.nodes),
        communities=relations.manager.layout.communities + tuple(sorted(h.unused_tags)))
    compare = proto.compare_for(protocol)
    for a in attrs:
        if proto.apply_h(h, a) is None:
            violations.append(Violation('drop-equivalence', f'h({a!r}) is no route'))
            break
    for a, b in zip(attrs, attrs[1:] + attrs[:1]):
        ha, hb = proto.apply_h(h, a), proto.apply_h(h, b)
        if compare(a, b) != compare(ha, hb) or compare(b, a) != compare(hb, ha):
            violations.append(Violation(
                'rank-equivalence', f'{a!r} and {b!r} compare differently under h'))
            break
    return violations


def _check_common(relations: EdgeRelations, amap: AbstractionMap, samples: int, seed: int):
    violations = []
    blocks = amap.blocks()
    dest = relations.topology.dest
    if blocks.get(amap.f.get(dest)) != frozenset({dest}):
        violations.append(Violation(
            'dest-equivalence', 'the destination does not have a block to itself', dest))
    violations += _check_attributes(relations, amap, samples, seed)

    grouped = {}
    for (u, v), key in relations.keys.items():
        if amap.f[u] != amap.f[v]:
            grouped.setdefault((amap.f[u], amap.f[v]), set()).add(key)
    for (a, b), keys in sorted(grouped.items()):
        if len(keys) > 1:
            violations.append(Violation(
                'trans-equivalence', f'edges into ({a}, {b}) transfer differently', a))
    return violations


def check_effective(
        relations: EdgeRelations, amap: AbstractionMap,
        samples: int = DEFAULT_RANK_SAMPLES, seed: int = 0) -> Certificate:
    """ Checks the conditions of an effective abstraction, locally. """
    violations = _check_common(relations, amap, samples, seed)
    topology = relations.topology
    blocks = amap.blocks()
    for u, v in sorted(topology.edges):
        image = (amap.f[u], amap.f[v])
        if image[0] != image[1] and image not in amap.edges:
            violations.append(Violation(
                'forall-exists', f'edge ({u}, {v}) has no abstract image', u))
    for a, b in sorted(amap.edges):
        for u in sorted(blocks[a]):
            if not any(amap.f[v] == b for v in topology.neighbors(u)):
                violations.append(Violation(
                    'forall-exists', f'no edge into block {b} for edge ({a}, {b})', u))
    if relations.protocol is Protocol.BGP and relations.needs_case_split and (
            amap.mode is Mode.FORALL_EXISTS):
        violations.append(Violation(
            'bgp-effective', 'local preference varies; requires a bgp-effective abstraction'))
    checked = (
        'dest-equivalence', 'drop-equivalence', 'orig-equivalence',
        'rank-equivalence', 'trans-equivalence', 'forall-exists')
    return Certificate(checked, tuple(violations))


def check_bgp_effective(
        relations: EdgeRelations, amap: AbstractionMap,
        samples: int = DEFAULT_RANK_SAMPLES, seed: int = 0) -> Certificate:
    """ Checks the conditions of a BGP-effective abstraction, locally.

    Keys never include loop prevention, so trans-equivalence of keys is
    transfer-approx.
    """
    violations = _check_common(relations, amap, samples, seed)
    topology = relations.topology
    nodes = sorted(topology.nodes)
    for u in nodes:
        for v in nodes:
            if u == v:
                continue
            concrete = (u, v) in topology.edges
            if amap.f[u] == amap.f[v]:
                if concrete:
                    violations.append(Violation(
                        'forall-forall', f'edge ({u}, {v}) stays inside one block', u))
                continue
            if concrete != ((amap.f[u], amap.f[v]) in amap.edges):
                violations.append(Violation(
                    'forall-forall', f'({u}, {v}) disagrees with its abstract image', u))
    for block, members in amap.blocks().items():
        expected = min(len(relations.block_prefs(members)), len(members))
        found = len(amap.copies_of(block))
        if expected > 1 and found != expected:
            violations.append(Violation(
                'bgp-cases', f'block needs {expected} copies, has {found}', block))
    checked = (
        'dest-equivalence', 'drop-equivalence', 'orig-equivalence',
        'rank-equivalence', 'transfer-approx', 'forall-forall', 'bgp-cases')
    return Certificate(checked, tuple(violations))


def certify(relations: EdgeRelations, amap: AbstractionMap, **kwargs) -> Certificate:
    """ Runs whichever check fits the map's mode. """
    if amap.mode is Mode.FORALL_FORALL:
        return check_bgp_effective(relations, amap, **kwargs)
    return check_effective(relations, amap, **kwargs)


def _relevant_routes(spec: NetworkSpec, ec: DestEquivClass, u) -> list:
    return [
        route for route in spec.static_routes.get(u, ())
        if ec.representative_prefix.subnet_of(route.prefix)]


def project_network(relations: EdgeRelations, amap: AbstractionMap) -> NetworkSpec:
    """ The network `amap` describes, configured from representatives.

    Each abstract link takes its policies from the lowest concrete link
    mapped onto it. No certificate is required.
    """
    spec = relations.spec
    topology = relations.topology
    blocks = amap.blocks()
    strip = amap.h.kind is AbstractionKind.BGP_DROP_UNUSED_TAGS

    nodes = {}
    for block in blocks:
        concrete = spec.nodes[block]
        for copy in amap.copies_of(block):
            nodes[copy] = Node(copy, concrete.asn, concrete.protocols)

    representatives = {}
    for u, v in sorted(topology.edges):
        a, b = amap.f[u], amap.f[v]
        if a < b:
            representatives.setdefault((a, b), (u, v))

    links, interfaces, policy_ids, acl_ids = [], {}, set(), set()
    for (a, b), (u, v) in sorted(representatives.items()):
        link = spec.link(u, v)
        for x in amap.copies_of(a):
            for y in amap.copies_of(b):
                links.append(Link(x, y, link.ospf_cost, link.ospf_area))
                for owner, neighbor, source in ((x, y, (u, v)), (y, x, (v, u))):
                    record = spec.interface(*source)
                    interfaces[(owner, neighbor)] = Interface(
                        owner, neighbor, record.import_policy, record.export_policy,
                        record.acl)
                    policy_ids.update(
                        p for p in (record.import_policy, record.export_policy)
                        if p is not None)
                    if record.acl is not None:
                        acl_ids.add(record.acl)

    policies = {}
    for id in sorted(policy_ids):
        policy = spec.policies[id]
        policies[id] = policy.without_tags(amap.h.unused_tags) if strip else policy

    static_routes = {}
    if relations.protocol is Protocol.STATIC:
        for block in blocks:
            routes = []
            for route in _relevant_routes(spec, relations.ec, block):
                hop = amap.f.get(route.next_hop)
                if hop is not None and hop != block:
                    mapped = StaticRoute(route.prefix, hop)
                    if mapped not in routes:
                        routes.append(mapped)
            if routes:
                static_routes[block] = tuple(routes)

    return NetworkSpec(
        nodes=dict(sorted(nodes.items())),
        links=tuple(links),
        interfaces=dict(sorted(interfaces.items())),
        policies=policies,
        acls={id: spec.acls[id] for id in sorted(acl_ids)},
        static_routes=static_routes,
        origins={amap.dest: tuple(relations.ec.prefixes)})


def build_abstract_network(
        relations: EdgeRelations, amap: AbstractionMap,
        certificate: Optional[Certificate]) -> AbstractNetwork:
    """ Emits the compressed network once its certificate has passed. """
    if certificate is None or not certificate.ok:
        raise CertificateMissing(
            f'no passing certificate for {relations.ec} towards {relations.dest}')
    spec = project_network(relations, amap)
    topology = relations.topology
    return AbstractNetwork(
        ec=relations.ec, dest=relations.dest, protocol=relations.protocol,
        spec=spec, map=amap, certificate=certificate,
        concrete_size=(len(topology.nodes), len(topology.edges) // 2),
        abstract_size=(len(spec.nodes), len(spec.links)))


def compress_ec(
        spec: NetworkSpec, ec: DestEquivClass, dest, protocol,
        samples: int = DEFAULT_RANK_SAMPLES) -> AbstractNetwork:
    """ Compresses one (class, destination, protocol) job. """
    started = time.perf_counter()
    relations = edge_relations(spec, ec, dest, protocol)
    amap = find_abstraction(relations)
    certificate = certify(relations, amap, samples=samples)
    if not certificate.ok:
        for violation in certificate.violations:
            logger.error('%s/%s: %s', ec, dest, violation)
    abstract = build_abstract_network(relations, amap, certificate)
    logger.info(
        '%s towards %s (%s): %d/%d -> %d/%d in %.3fs', ec, dest,
        abstract.protocol.value, *abstract.concrete_size, *abstract.abstract_size,
        time.perf_counter() - started)
    return abstract


def compression_jobs(spec: NetworkSpec, ecs) -> list:
    """ (ec, dest, protocol) for every job, in deterministic order. """
    jobs = []
    for ec in ecs:
        factory = specialize_spec(spec, ec)
        for dest in sorted(ec.dest_nodes):
            for protocol in factory.protocols(dest):
                jobs.append((ec, dest, protocol))
    return jobs


def run_job(job) -> AbstractNetwork:
    spec, ec, dest, protocol, samples = job
    return compress_ec(spec, ec, dest, protocol, samples)
