""" Destination equivalence classes.

The announced address space is cut into classes that share the same
origin nodes and the same outcome under every prefix filter (policy
prefix matches, ACL entries and static-route prefixes). Each class is
then compressed on its own, through SRPs specialized to a
representative prefix.
"""

from dataclasses import dataclass, field
from functools import cached_property
from ipaddress import IPv4Network
import logging
from cpcompress import protocols as proto
from cpcompress.network import NetworkSpec, prefix_within
from cpcompress.protocols import EdgePolicy, Protocol
from cpcompress.srp import SrpInstance, Topology

logger = logging.getLogger(__name__)


class PrefixTrie:
    """ A binary trie on IPv4 prefix bits.

    Inserted prefixes either announce (carry origin nodes) or mark a
    filter boundary. `leaves()` cuts the announced space into prefixes
    that contain no inserted prefix strictly inside them.
    """

    class Node:
        __slots__ = ('children', 'origins', 'boundary')

        def __init__(self):
            self.children = [None, None]
            self.origins = set()
            self.boundary = False

    def __init__(self):
        self.root = self.Node()

    def insert(self, prefix: IPv4Network, origin=None):
        node = self.root
        address = int(prefix.network_address)
        for depth in range(prefix.prefixlen):
            bit = (address >> (31 - depth)) & 1
            if node.children[bit] is None:
                node.children[bit] = self.Node()
            node = node.children[bit]
        if origin is None:
            node.boundary = True
        else:
            node.origins.add(origin)

    def leaves(self) -> list:
        """ (prefix, origin nodes, boundaries containing it) per leaf.

        Origins come from the most specific announcing prefix.
        """
        found = []
        stack = [(self.root, IPv4Network('0.0.0.0/0'), frozenset(), frozenset())]
        while stack:
            node, prefix, origins, boundaries = stack.pop()
            if node is not None:
                if node.origins:
                    origins = frozenset(node.origins)
                if node.boundary:
                    boundaries = boundaries | {prefix}
            if node is not None and any(node.children):
                low, high = prefix.subnets()
                stack.append((node.children[1], high, origins, boundaries))
                stack.append((node.children[0], low, origins, boundaries))
            elif origins:
                found.append((prefix, origins, boundaries))
        return sorted(found, key=lambda leaf: leaf[0])


@dataclass(frozen=True)
class DestEquivClass:
    """ Prefixes that share origin nodes and filter behavior. """
    prefixes: tuple
    dest_nodes: frozenset
    representative_prefix: IPv4Network

    def __str__(self):
        return str(self.representative_prefix)


def boundary_prefixes(spec: NetworkSpec) -> frozenset:
    """ Prefixes whose edges must not fall inside a class. """
    boundaries = set(spec.filter_prefixes())
    for routes in spec.static_routes.values():
        boundaries.update(route.prefix for route in routes)
    return frozenset(boundaries)


def compute_ecs(spec: NetworkSpec) -> list:
    """ Partitions the originated prefixes into destination classes,
    ordered by their lowest prefix. """
    trie = PrefixTrie()
    for node, prefixes in spec.origins.items():
        for prefix in prefixes:
            trie.insert(prefix, node)
    for prefix in boundary_prefixes(spec):
        trie.insert(prefix)

    groups = {}
    for prefix, origins, boundaries in trie.leaves():
        groups.setdefault((origins, boundaries), []).append(prefix)
    classes = [
        DestEquivClass(tuple(prefixes), origins, prefixes[0])
        for (origins, _), prefixes in groups.items()]
    classes.sort(key=lambda ec: ec.representative_prefix)
    logger.info('%d destination classes', len(classes))
    return classes


def find_ec(ecs, prefix: IPv4Network):
    """ The class covering `prefix`, else the first class inside it. """
    for ec in ecs:
        if any(prefix.subnet_of(p) for p in ec.prefixes):
            return ec
    for ec in ecs:
        if any(p.subnet_of(prefix) for p in ec.prefixes):
            return ec
    return None


class _RipTransfer:
    def __init__(self, policies):
        self.policies = policies

    def __call__(self, edge, attr):
        return proto.rip_transfer(edge, attr, self.policies[edge])


class _OspfTransfer:
    def __init__(self, policies, costs, crossings):
        self.policies = policies
        self.costs = costs
        self.crossings = crossings

    def __call__(self, edge, attr):
        return proto.ospf_transfer(
            edge, attr, self.costs[edge], self.crossings[edge], self.policies[edge])


class _BgpTransfer:
    def __init__(self, policies):
        self.policies = policies

    def __call__(self, edge, attr):
        return proto.bgp_transfer(edge, attr, self.policies[edge])


class _StaticTransfer:
    def __init__(self, present, permitted):
        self.present = present
        self.permitted = permitted

    def __call__(self, edge, attr):
        return proto.static_transfer(
            edge, attr, self.present[edge], self.permitted[edge])


@dataclass(frozen=True)
class SrpFactory:
    """ Builds the SRPs of one destination class of a network. """
    spec: NetworkSpec
    ec: DestEquivClass
    _policies: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def prefix(self) -> IPv4Network:
        return self.ec.representative_prefix

    def policy(self, id, protocol=None):
        """ A route policy specialized to this class (cached). """
        key = (id, protocol)
        if key not in self._policies:
            self._policies[key] = self.spec.policy(id).specialize(self.prefix, protocol)
        return self._policies[key]

    def acl_permits(self, u, v) -> bool:
        acl = self.spec.acl(self.spec.interface(u, v).acl)
        return acl is None or acl.permits(self.prefix)

    def edge_policy(self, u, v, protocol=None) -> EdgePolicy:
        """ `v`'s export, `u`'s import and `u`'s ACL for edge (u, v). """
        return EdgePolicy(
            export=self.policy(self.spec.interface(v, u).export_policy, protocol),
            import_=self.policy(self.spec.interface(u, v).import_policy, protocol),
            permitted=self.acl_permits(u, v))

    def static_present(self, u, v) -> bool:
        return any(
            route.next_hop == v and self.prefix.subnet_of(route.prefix)
            for route in self.spec.static_routes.get(u, ()))

    @cached_property
    def has_static_routes(self) -> bool:
        return any(
            prefix_within(self.prefix, [route.prefix])
            for routes in self.spec.static_routes.values() for route in routes)

    def protocols(self, dest) -> tuple:
        """ Protocols to model for destination `dest`. """
        protocols = {
            Protocol(p) for p in self.spec.nodes[dest].protocols} - {Protocol.STATIC}
        if self.has_static_routes:
            protocols.add(Protocol.STATIC)
        return tuple(sorted(protocols, key=lambda p: p.value))

    def topology(self, dest, protocol) -> Topology:
        protocol = Protocol(protocol)
        if protocol is Protocol.STATIC:
            nodes = frozenset(self.spec.nodes)
        else:
            nodes = self.spec.nodes_running(protocol)
        edges = frozenset(
            (u, v) for u, v in self.spec.edges if u in nodes and v in nodes)
        return Topology(nodes, edges, dest)

    def dest_area(self, dest) -> int:
        links = sorted(
            (link for link in self.spec.links if dest in link.endpoints),
            key=lambda link: tuple(sorted(link.endpoints)))
        return links[0].ospf_area if links else proto.BACKBONE_AREA

    def build(self, dest, protocol) -> SrpInstance:
        """ The SRP for routing towards `dest` with `protocol`. """
        protocol = Protocol(protocol)
        topology = self.topology(dest, protocol)
        edges = sorted(topology.edges)
        # Static routes ignore policies; only presence and ACLs matter:
        if protocol is Protocol.STATIC:
            transfer = _StaticTransfer(
                {e: self.static_present(*e) for e in edges},
                {e: self.acl_permits(*e) for e in edges})
        else:
            policies = {e: self.edge_policy(*e, protocol) for e in edges}
            if protocol is Protocol.RIP:
                transfer = _RipTransfer(policies)
            elif protocol is Protocol.OSPF:
                area = self.dest_area(dest)
                # Crossing into another area than the destination's is inter-area:
                transfer = _OspfTransfer(
                    policies,
                    {e: self.spec.link(*e).ospf_cost for e in edges},
                    {e: self.spec.link(*e).ospf_area != area for e in edges})
            else:
                transfer = _BgpTransfer(policies)
        # Static transfer is the same for every incoming attribute:
        return SrpInstance(
            topology, protocol.value, proto.init_attr(protocol),
            proto.compare_for(protocol), transfer,
            constant_transfer=protocol is Protocol.STATIC)

    def instances(self):
        """ (dest, protocol, srp) for every destination of the class. """
        for dest in sorted(self.ec.dest_nodes):
            for protocol in self.protocols(dest):
                yield dest, protocol, self.build(dest, protocol)


def specialize_spec(spec: NetworkSpec, ec: DestEquivClass) -> SrpFactory:
    """ Specializes `spec` to one destination class. """
    return SrpFactory(spec, ec)
