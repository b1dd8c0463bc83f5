""" Attribute domains, preference and transfer for RIP, OSPF, eBGP and
static routing, plus the attribute abstractions (h) used to relate a
network to its compressed form.

The configuration-driven part of a transfer (route policies and ACLs)
is supplied by the caller as an `EdgePolicy`; the structural part
(hop counting, cost accumulation, AS-path prepending and loop
rejection) lives here.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping
import random
from cpcompress.errors import UnmappedNode

DEFAULT_LOCAL_PREF = 100
RIP_MAX_HOPS = 15
BACKBONE_AREA = 0


class Protocol(str, Enum):
    """ Routing protocols an SRP can model. """
    BGP = 'bgp'
    OSPF = 'ospf'
    RIP = 'rip'
    STATIC = 'static'


@dataclass(frozen=True, order=True)
class RipAttr:
    """ A RIP route: hop count to the destination. """
    hops: int

    def __post_init__(self):
        if not 0 <= self.hops <= RIP_MAX_HOPS:
            raise ValueError(f'RIP hop count {self.hops} out of range')


@dataclass(frozen=True)
class OspfAttr:
    """ An OSPF route: path cost and whether it crossed areas. """
    cost: int
    inter_area: bool = False


@dataclass(frozen=True)
class BgpAttr:
    """ An eBGP route: local preference, communities and AS path. """
    lp: int = DEFAULT_LOCAL_PREF
    communities: frozenset = frozenset()
    as_path: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'communities', frozenset(self.communities))
        object.__setattr__(self, 'as_path', tuple(self.as_path))


@dataclass(frozen=True)
class StaticAttr:
    """ The presence of a static route. The carrier has one value. """
    present: bool = True


STATIC_ROUTE = StaticAttr()


class Rank(Enum):
    """ Outcome of comparing two BGP attributes. """
    FIRST = 'first'
    SECOND = 'second'
    INCOMPARABLE = 'incomparable'


def init_attr(protocol: Protocol):
    """ The attribute the destination starts with (a_d). """
    return {
        Protocol.RIP: RipAttr(0),
        Protocol.OSPF: OspfAttr(0, False),
        Protocol.BGP: BgpAttr(),
        Protocol.STATIC: STATIC_ROUTE,
    }[Protocol(protocol)]


class PermitAll:
    """ A policy that passes every route through unchanged. """

    def apply(self, communities: frozenset, lp: int):
        return communities, lp

    def __repr__(self):
        return 'PermitAll()'


PERMIT_ALL = PermitAll()


@dataclass(frozen=True)
class EdgePolicy:
    """ The configuration applied to routes crossing one edge `(u, v)`:
    `v`'s export policy, `u`'s import policy and `u`'s outbound ACL.

    Local preference does not cross the session: `u`'s import policy
    sees every route at `DEFAULT_LOCAL_PREF`.

    Policies are anything with `apply(communities, lp)` returning the
    rewritten `(communities, lp)` or `None` to drop.
    """
    export: object = PERMIT_ALL
    import_: object = PERMIT_ALL
    permitted: bool = True

    def apply(self, communities: frozenset, lp: int):
        if not self.permitted:
            return None
        route = self.export.apply(communities, lp)
        if route is None:
            return None
        communities, _ = route
        return self.import_.apply(communities, DEFAULT_LOCAL_PREF)

    def permits(self) -> bool:
        """ Whether a plain route (no communities, default lp) survives. """
        return self.apply(frozenset(), DEFAULT_LOCAL_PREF) is not None


OPEN_EDGE = EdgePolicy()


def rip_compare(a: RipAttr, b: RipAttr) -> bool:
    return a.hops < b.hops


def rip_transfer(e, a, policy: EdgePolicy = OPEN_EDGE):
    """ One more hop, dropping routes past the hop limit. """
    if a is None or a.hops >= RIP_MAX_HOPS or not policy.permits():
        return None
    return RipAttr(a.hops + 1)


def ospf_compare(a: OspfAttr, b: OspfAttr) -> bool:
    # Intra-area routes first, then cheaper routes:
    return (a.inter_area, a.cost) < (b.inter_area, b.cost)


def ospf_transfer(
        e, a, cost: int = 1, crosses_area: bool = False,
        policy: EdgePolicy = OPEN_EDGE):
    """ Adds the link cost; the inter-area flag sticks once set. """
    if a is None or not policy.permits():
        return None
    return OspfAttr(a.cost + cost, a.inter_area or crosses_area)


def static_compare(a: StaticAttr, b: StaticAttr) -> bool:
    return False


def static_transfer(e, a, present: bool, permitted: bool = True):
    """ Constant per edge: the route exists iff it is configured. """
    return STATIC_ROUTE if present and permitted else None


def bgp_compare(a: BgpAttr, b: BgpAttr) -> Rank:
    """ Higher local preference wins, then the shorter AS path. """
    if a.lp != b.lp:
        return Rank.FIRST if a.lp > b.lp else Rank.SECOND
    if len(a.as_path) != len(b.as_path):
        return Rank.FIRST if len(a.as_path) < len(b.as_path) else Rank.SECOND
    return Rank.INCOMPARABLE


def bgp_prefers(a: BgpAttr, b: BgpAttr) -> bool:
    return bgp_compare(a, b) is Rank.FIRST


def bgp_transfer(e, a, policy: EdgePolicy = OPEN_EDGE, loop_check: bool = True):
    """ Carries `a` from `v` to `u` over `e = (u, v)`.

    Rejects routes whose AS path already holds `u`, then applies `v`'s
    export policy, prepends `v` and applies `u`'s import policy to the
    route at the default local preference.
    `loop_check=False` leaves only the policy-driven part.
    """
    if a is None:
        return None
    u, v = e
    if loop_check and u in a.as_path:
        return None
    route = policy.apply(a.communities, a.lp)
    if route is None:
        return None
    communities, lp = route
    return BgpAttr(lp, communities, (v,) + a.as_path)


def compare_for(protocol: Protocol):
    """ The strict preference `compare(a, b)` for a protocol. """
    return {
        Protocol.RIP: rip_compare,
        Protocol.OSPF: ospf_compare,
        Protocol.BGP: bgp_prefers,
        Protocol.STATIC: static_compare,
    }[Protocol(protocol)]


class AbstractionKind(str, Enum):
    """ The supported attribute abstractions. """
    IDENTITY = 'identity'
    BGP_PATH_RENAME = 'bgp_path_rename'
    BGP_DROP_UNUSED_TAGS = 'bgp_drop_unused_tags'


@dataclass(frozen=True)
class AttrAbstraction:
    """ The attribute map h.

    BGP kinds rename AS-path nodes through `node_map` (the node map f);
    `bgp_drop_unused_tags` also forgets `unused_tags`.
    """
    kind: AbstractionKind = AbstractionKind.IDENTITY
    node_map: Mapping = field(default_factory=dict, compare=False, repr=False)
    unused_tags: frozenset = frozenset()

    def with_node_map(self, node_map: Mapping) -> 'AttrAbstraction':
        """ The same abstraction over a different node map. """
        return AttrAbstraction(self.kind, node_map, self.unused_tags)


IDENTITY = AttrAbstraction()


def apply_h(h: AttrAbstraction, a):
    """ Maps a concrete attribute to its abstract counterpart. """
    if a is None:
        return None
    if h.kind is AbstractionKind.IDENTITY:
        return a
    if not isinstance(a, BgpAttr):
        raise ValueError(f'{h.kind.value} applies to BGP attributes, not {a!r}')
    path = []
    for node in a.as_path:
        if node not in h.node_map:
            raise UnmappedNode(node)
        path.append(h.node_map[node])
    communities = a.communities
    if h.kind is AbstractionKind.BGP_DROP_UNUSED_TAGS:
        communities = communities - h.unused_tags
    return BgpAttr(a.lp, communities, tuple(path))


def sample_attributes(
        protocol: Protocol, count: int, rng: random.Random,
        nodes=(), lp_values=(DEFAULT_LOCAL_PREF,), communities=()) -> list:
    """ Draws attributes from a protocol's (finite, EC-scoped) carrier. """
    protocol = Protocol(protocol)
    if protocol is Protocol.STATIC:
        return [STATIC_ROUTE]
    if protocol is Protocol.RIP:
        return [RipAttr(rng.randint(0, RIP_MAX_HOPS)) for _ in range(count)]
    if protocol is Protocol.OSPF:
        return [
            OspfAttr(rng.randint(0, 4 * RIP_MAX_HOPS), rng.random() < 0.5)
            for _ in range(count)]
    nodes = sorted(nodes)
    lp_values = sorted(lp_values)
    communities = sorted(communities)
    samples = []
    for _ in range(count):
        length = rng.randint(0, len(nodes))
        samples.append(BgpAttr(
            rng.choice(lp_values),
            frozenset(c for c in communities if rng.random() < 0.5),
            tuple(rng.sample(nodes, length))))
    return samples
