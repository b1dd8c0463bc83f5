""" The vendor-independent network specification.

A `NetworkSpec` holds the topology (nodes and links), per-interface
route policies and ACLs, static routes and originated prefixes. It is
read from and written to `bonsai-net/1` JSON documents.

Each link `{a, b}` has two interfaces: the one owned by `a` facing `b`
and the one owned by `b` facing `a`. An interface's import policy
filters routes its owner receives over the link, its export policy
filters routes its owner sends, and its ACL filters traffic its owner
forwards over the link.
"""

from dataclasses import dataclass, field, replace
from ipaddress import IPv4Network
from typing import Mapping, Optional
import json
import logging
import warnings
from pydantic import ValidationError
from cpcompress.errors import DanglingReference, ParseError
from cpcompress.protocols import (
    AbstractionKind, AttrAbstraction, DEFAULT_LOCAL_PREF, Protocol)
from cpcompress import schema

logger = logging.getLogger(__name__)

DEFAULT_OSPF_COST = 1


@dataclass(frozen=True)
class Node:
    """ A router. """
    id: str
    asn: int
    protocols: frozenset = frozenset({Protocol.BGP})


@dataclass(frozen=True)
class Link:
    """ An undirected link between two routers. """
    a: str
    b: str
    ospf_cost: int = DEFAULT_OSPF_COST
    ospf_area: int = 0

    @property
    def endpoints(self) -> tuple:
        return (self.a, self.b)


@dataclass(frozen=True)
class Interface:
    """ `node`'s side of its link to `neighbor`. """
    node: str
    neighbor: str
    import_policy: Optional[str] = None
    export_policy: Optional[str] = None
    acl: Optional[str] = None


@dataclass(frozen=True)
class PolicyMatch:
    """ Conditions of a clause. Empty tuples match anything. """
    prefixes: tuple = ()
    communities: tuple = ()
    protocols: tuple = ()


@dataclass(frozen=True)
class PolicyClause:
    match: PolicyMatch = PolicyMatch()
    permit: bool = True
    add_communities: tuple = ()
    delete_communities: tuple = ()
    set_local_pref: Optional[int] = None

    def rewrite(self, communities: frozenset, lp: int):
        """ Applies this clause's actions to a permitted route. """
        communities = (
            communities - set(self.delete_communities)) | set(self.add_communities)
        if self.set_local_pref is not None:
            lp = self.set_local_pref
        return frozenset(communities), lp


def prefix_within(prefix: IPv4Network, entries) -> bool:
    """ True iff `prefix` lies inside one of `entries`. """
    return any(prefix.subnet_of(entry) for entry in entries)


@dataclass(frozen=True)
class SpecializedClause:
    """ A clause with prefix (and possibly protocol) matches resolved.

    `communities` of `None` means the clause has no community condition;
    `protocols` of `None` means the protocol condition is resolved.
    """
    communities: Optional[frozenset]
    protocols: Optional[frozenset]
    clause: PolicyClause

    def matches(self, communities: frozenset, protocol=None) -> bool:
        if self.communities is not None and not self.communities & communities:
            return False
        if self.protocols is not None and protocol not in self.protocols:
            return False
        return True

    @property
    def unconditional(self) -> bool:
        return self.communities is None and self.protocols is None


@dataclass(frozen=True)
class SpecializedPolicy:
    """ A route policy specialized to one destination class. """
    clauses: tuple
    protocol: Optional[Protocol] = None

    def apply(self, communities: frozenset, lp: int):
        """ First matching clause wins; no match denies. """
        for clause in self.clauses:
            if clause.matches(communities, self.protocol):
                if not clause.clause.permit:
                    return None
                return clause.clause.rewrite(communities, lp)
        return None

    def local_prefs(self) -> frozenset:
        """ lp constants some route can actually be assigned. """
        prefs = set()
        for clause in self.clauses:
            if clause.clause.permit and clause.clause.set_local_pref is not None:
                prefs.add(clause.clause.set_local_pref)
            if clause.unconditional:
                break
        return frozenset(prefs)


@dataclass(frozen=True)
class RoutePolicy:
    """ An ordered list of clauses (route-map semantics). """
    clauses: tuple = ()

    def specialize(self, prefix: IPv4Network, protocol=None) -> SpecializedPolicy:
        """ Resolves prefix matches against `prefix`, and protocol
        matches too when `protocol` is given. """
        kept = []
        for clause in self.clauses:
            match = clause.match
            if match.prefixes and not prefix_within(prefix, match.prefixes):
                continue
            protocols = frozenset(match.protocols) if match.protocols else None
            if protocol is not None and protocols is not None:
                if protocol not in protocols:
                    continue
                protocols = None
            communities = frozenset(match.communities) if match.communities else None
            kept.append(SpecializedClause(communities, protocols, clause))
        return SpecializedPolicy(
            tuple(kept), Protocol(protocol) if protocol is not None else None)

    def evaluate(self, communities, lp: int, prefix: IPv4Network, protocol):
        """ Interprets the policy directly on one route. """
        communities = frozenset(communities)
        for clause in self.clauses:
            match = clause.match
            if match.prefixes and not prefix_within(prefix, match.prefixes):
                continue
            if match.communities and not communities & set(match.communities):
                continue
            if match.protocols and protocol not in match.protocols:
                continue
            if not clause.permit:
                return None
            return clause.rewrite(communities, lp)
        return None

    def without_tags(self, tags) -> 'RoutePolicy':
        """ Drops add/delete actions on `tags`. """
        tags = set(tags)
        return RoutePolicy(tuple(
            replace(
                clause,
                add_communities=tuple(c for c in clause.add_communities if c not in tags),
                delete_communities=tuple(
                    c for c in clause.delete_communities if c not in tags))
            for clause in self.clauses))


PERMIT_ALL_POLICY = RoutePolicy((PolicyClause(),))


@dataclass(frozen=True)
class AclEntry:
    prefix: IPv4Network
    permit: bool


@dataclass(frozen=True)
class AclList:
    """ Ordered destination-prefix filter with an implicit trailing deny. """
    entries: tuple = ()

    def permits(self, prefix: IPv4Network) -> bool:
        for entry in self.entries:
            if prefix.subnet_of(entry.prefix):
                return entry.permit
        return False


@dataclass(frozen=True)
class StaticRoute:
    prefix: IPv4Network
    next_hop: str


@dataclass(frozen=True)
class NetworkSpec:
    """ A complete network: topology plus routing configuration. """
    nodes: Mapping
    links: tuple
    interfaces: Mapping = field(default_factory=dict)
    policies: Mapping = field(default_factory=dict)
    acls: Mapping = field(default_factory=dict)
    static_routes: Mapping = field(default_factory=dict)
    origins: Mapping = field(default_factory=dict)

    @property
    def edges(self) -> frozenset:
        """ Both directions of every link. """
        return frozenset(
            edge for link in self.links
            for edge in ((link.a, link.b), (link.b, link.a)))

    def neighbors(self, node) -> tuple:
        return tuple(sorted(v for u, v in self.edges if u == node))

    def link(self, u, v) -> Link:
        for link in self.links:
            if {link.a, link.b} == {u, v}:
                return link
        raise KeyError((u, v))

    def interface(self, node, neighbor) -> Interface:
        """ The interface record, defaulted when the document omits it. """
        return self.interfaces.get(
            (node, neighbor), Interface(node, neighbor))

    def policy(self, id) -> RoutePolicy:
        if id is None:
            return PERMIT_ALL_POLICY
        return self.policies[id]

    def acl(self, id) -> Optional[AclList]:
        return None if id is None else self.acls[id]

    def protocols(self) -> frozenset:
        protocols = set()
        for node in self.nodes.values():
            protocols |= node.protocols
        return frozenset(protocols)

    def nodes_running(self, protocol) -> frozenset:
        return frozenset(
            node.id for node in self.nodes.values()
            if Protocol(protocol) in node.protocols)

    def communities(self) -> tuple:
        """ Every community mentioned anywhere, sorted. """
        seen = set()
        for policy in self.policies.values():
            for clause in policy.clauses:
                seen.update(clause.match.communities)
                seen.update(clause.add_communities)
                seen.update(clause.delete_communities)
        return tuple(sorted(seen, key=community_key))

    def matched_communities(self) -> frozenset:
        return frozenset(
            community for policy in self.policies.values()
            for clause in policy.clauses for community in clause.match.communities)

    def unused_communities(self) -> frozenset:
        """ Communities some policy sets or clears but none matches on. """
        return frozenset(self.communities()) - self.matched_communities()

    def local_prefs(self) -> frozenset:
        """ The default lp plus every set-local-pref constant. """
        return frozenset({DEFAULT_LOCAL_PREF} | {
            clause.set_local_pref for policy in self.policies.values()
            for clause in policy.clauses if clause.set_local_pref is not None})

    def filter_prefixes(self) -> frozenset:
        """ Prefixes any policy or ACL matches on. """
        prefixes = set()
        for policy in self.policies.values():
            for clause in policy.clauses:
                prefixes.update(clause.match.prefixes)
        for acl in self.acls.values():
            prefixes.update(entry.prefix for entry in acl.entries)
        return frozenset(prefixes)


def community_key(community: str):
    high, low = community.split(':')
    return int(high), int(low)


def _policy_from_model(id: str, model: schema.PolicyModel) -> RoutePolicy:
    clauses = []
    for clause in model.clauses:
        if clauses and clauses[-1].match == PolicyMatch():
            warnings.warn(f'policy {id!r}: clause {len(clauses)} follows a catch-all')
        clauses.append(PolicyClause(
            match=PolicyMatch(
                prefixes=tuple(IPv4Network(p) for p in clause.match.prefixes),
                communities=tuple(clause.match.communities),
                protocols=tuple(Protocol(p) for p in clause.match.protocols)),
            permit=clause.action == 'permit',
            add_communities=tuple(clause.add_communities),
            delete_communities=tuple(clause.delete_communities),
            set_local_pref=clause.set_local_pref))
    return RoutePolicy(tuple(clauses))


def _resolve(model: schema.NetworkModel) -> NetworkSpec:
    """ Converts a validated document into a `NetworkSpec`. """
    nodes = {}
    for node in model.nodes:
        if node.id in nodes:
            raise ParseError(None, f'duplicate node {node.id!r}')
        nodes[node.id] = Node(node.id, node.asn, frozenset(node.protocols))

    policies = {id: _policy_from_model(id, p) for id, p in model.policies.items()}
    acls = {
        id: AclList(tuple(
            AclEntry(IPv4Network(entry.prefix), entry.action == 'permit')
            for entry in acl.entries))
        for id, acl in model.acls.items()}

    links = []
    interfaces = {}
    seen = set()
    for edge in model.edges:
        a, b = edge.endpoints
        for endpoint in (a, b):
            if endpoint not in nodes:
                raise DanglingReference(endpoint, 'node')
        if a == b:
            raise ParseError(None, f'self-loop at {a!r}')
        if frozenset((a, b)) in seen:
            raise ParseError(None, f'duplicate link {a!r}-{b!r}')
        seen.add(frozenset((a, b)))
        links.append(Link(a, b, edge.ospf_cost, edge.ospf_area))
        for owner, record in edge.interfaces.items():
            if owner not in (a, b):
                raise ParseError(
                    None, f'interface owner {owner!r} is not an endpoint of {a!r}-{b!r}')
            for policy in (record.import_policy, record.export_policy):
                if policy is not None and policy not in policies:
                    raise DanglingReference(policy, 'policy')
            if record.acl is not None and record.acl not in acls:
                raise DanglingReference(record.acl, 'acl')
            neighbor = b if owner == a else a
            interfaces[(owner, neighbor)] = Interface(
                owner, neighbor, record.import_policy, record.export_policy,
                record.acl)
    # Default the interface records the document leaves out:
    for link in links:
        for owner, neighbor in ((link.a, link.b), (link.b, link.a)):
            interfaces.setdefault((owner, neighbor), Interface(owner, neighbor))

    static_routes = {}
    for node, routes in model.static_routes.items():
        if node not in nodes:
            raise DanglingReference(node, 'node')
        resolved = []
        for route in routes:
            if route.next_hop not in nodes:
                raise DanglingReference(route.next_hop, 'node')
            if frozenset((node, route.next_hop)) not in seen:
                raise ParseError(
                    None, f'static route at {node!r} leaves over a missing link '
                    f'to {route.next_hop!r}')
            resolved.append(StaticRoute(IPv4Network(route.prefix), route.next_hop))
        static_routes[node] = tuple(resolved)

    origins = {}
    for node, prefixes in model.origins.items():
        if node not in nodes:
            raise DanglingReference(node, 'node')
        origins[node] = tuple(IPv4Network(prefix) for prefix in prefixes)

    return NetworkSpec(
        nodes=dict(sorted(nodes.items())),
        links=tuple(links),
        interfaces=dict(sorted(interfaces.items())),
        policies=dict(sorted(policies.items())),
        acls=dict(sorted(acls.items())),
        static_routes=dict(sorted(static_routes.items())),
        origins=dict(sorted(origins.items())))


_DECODER = json.JSONDecoder()


def _skip_space(text: str, i: int) -> int:
    while i < len(text) and text[i] in ' \t\r\n':
        i += 1
    return i


def _line_of(text: str, loc) -> Optional[int]:
    """ The line where the value at `loc` starts, or None if the path
    can't be followed through `text`. """
    i = _skip_space(text, 0)
    try:
        for part in loc:
            if isinstance(part, int) and text[i] == '[':
                i = _skip_space(text, i + 1)
                for _ in range(part):
                    _, i = _DECODER.raw_decode(text, i)
                    i = _skip_space(text, _skip_space(text, i) + 1)
            elif isinstance(part, str) and text[i] == '{':
                i = _skip_space(text, i + 1)
                while True:
                    key, i = _DECODER.raw_decode(text, i)
                    # Skip the colon:
                    i = _skip_space(text, _skip_space(text, i) + 1)
                    if key == part:
                        break
                    _, i = _DECODER.raw_decode(text, i)
                    i = _skip_space(text, _skip_space(text, i) + 1)
            else:
                return None
    except (IndexError, ValueError):
        return None
    return text.count('\n', 0, i) + 1


def _load(text: str, model_class):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as error:
        raise ParseError(error.lineno, error.msg) from error
    try:
        return model_class.model_validate(raw)
    except ValidationError as error:
        first = error.errors()[0]
        where = '.'.join(str(part) for part in first['loc'])
        raise ParseError(
            _line_of(text, first['loc']), f'{where}: {first["msg"]}') from error


def parse_network_spec(text: str) -> NetworkSpec:
    """ Parses and resolves a `bonsai-net/1` network document. """
    return _resolve(_load(text, schema.NetworkModel))


def _policy_to_dict(policy: RoutePolicy) -> dict:
    return {'clauses': [{
        'match': {
            'prefixes': [str(p) for p in clause.match.prefixes],
            'communities': list(clause.match.communities),
            'protocols': [Protocol(p).value for p in clause.match.protocols],
        },
        'action': 'permit' if clause.permit else 'deny',
        'add_communities': list(clause.add_communities),
        'delete_communities': list(clause.delete_communities),
        'set_local_pref': clause.set_local_pref,
    } for clause in policy.clauses]}


def network_to_dict(spec: NetworkSpec) -> dict:
    """ The document form of `spec`, with a stable field order. """
    edges = []
    for link in spec.links:
        interfaces = {}
        for owner, neighbor in ((link.a, link.b), (link.b, link.a)):
            record = spec.interface(owner, neighbor)
            interfaces[owner] = {
                'import_policy': record.import_policy,
                'export_policy': record.export_policy,
                'acl': record.acl,
            }
        edges.append({
            'endpoints': [link.a, link.b],
            'ospf_cost': link.ospf_cost,
            'ospf_area': link.ospf_area,
            'interfaces': interfaces,
        })
    return {
        'version': schema.SCHEMA_VERSION,
        'nodes': [{
            'id': node.id,
            'asn': node.asn,
            'protocols': sorted(Protocol(p).value for p in node.protocols),
        } for node in spec.nodes.values()],
        'edges': edges,
        'policies': {
            id: _policy_to_dict(policy)
            for id, policy in sorted(spec.policies.items())},
        'acls': {
            id: {'entries': [{
                'prefix': str(entry.prefix),
                'action': 'permit' if entry.permit else 'deny',
            } for entry in acl.entries]}
            for id, acl in sorted(spec.acls.items())},
        'static_routes': {
            node: [{'prefix': str(r.prefix), 'next_hop': r.next_hop} for r in routes]
            for node, routes in sorted(spec.static_routes.items())},
        'origins': {
            node: [str(prefix) for prefix in prefixes]
            for node, prefixes in sorted(spec.origins.items())},
    }


def dump_network_spec(spec: NetworkSpec) -> str:
    """ Serializes `spec` as a `bonsai-net/1` document. """
    return json.dumps(network_to_dict(spec), indent=2) + '\n'


@dataclass(frozen=True)
class MappingRecord:
    """ The contents of an abstraction sidecar. """
    abstract_nodes: tuple
    f: Mapping
    h: AttrAbstraction
    copies: Mapping = field(default_factory=dict)


def dump_mapping(record: MappingRecord) -> str:
    document = {
        'abstract_nodes': list(record.abstract_nodes),
        'f': dict(sorted(record.f.items())),
        'h': {
            'kind': record.h.kind.value,
            'unused_tags': sorted(record.h.unused_tags, key=community_key),
        },
        'copies': {
            block: list(copies) for block, copies in sorted(record.copies.items())},
    }
    return json.dumps(document, indent=2) + '\n'


def parse_mapping(text: str) -> MappingRecord:
    """ Parses an abstraction sidecar. """
    model = _load(text, schema.MappingModel)
    known = set(model.abstract_nodes)
    for block, copies in model.copies.items():
        for copy in copies:
            if copy not in known:
                raise DanglingReference(copy, 'abstract node')
    for concrete, block in model.f.items():
        if block not in known and block not in model.copies:
            raise DanglingReference(block, 'abstract node')
    h = AttrAbstraction(
        AbstractionKind(model.h.kind), dict(model.f), frozenset(model.h.unused_tags))
    return MappingRecord(
        tuple(model.abstract_nodes), dict(model.f), h,
        {block: tuple(copies) for block, copies in model.copies.items()})


def emit_network_spec(abstract) -> tuple:
    """ Serializes an `AbstractNetwork` as (network document, sidecar). """
    return dump_network_spec(abstract.spec), dump_mapping(abstract.map.record())
