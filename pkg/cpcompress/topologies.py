""" Deterministic network generators.

`gen` builds the synthetic data-center, ring and full-mesh workloads
(eBGP shortest-path routing, prefix filters only). The remaining
builders produce the small hand-made networks used to exercise the
compressor and the oracle, plus random small networks for fuzzing.

Fattree arithmetic: for an even arity k there are k pods, each with
k/2 ToRs and k/2 aggregation switches fully meshed between them, and
k²/4 spines joined in a ring. Aggregation switch j of every pod uplinks
to the 3k/2+5 spines starting at (k/2)·j. That gives 5k²/4 nodes and
k³ + 11k²/4 links: 180/2124 for k=12, 500/9100 for k=20 and 1125/29475
for k=30.
"""

from ipaddress import IPv4Network
import logging
import math
import random
from cpcompress.errors import UnsupportedSize
from cpcompress.network import (
    AclEntry, AclList, Interface, Link, NetworkSpec, Node, PolicyClause,
    PolicyMatch, RoutePolicy, StaticRoute)
from cpcompress.protocols import Protocol

logger = logging.getLogger(__name__)

BASE_ASN = 65000
FIXTURE_PREFIX = IPv4Network('10.0.0.0/24')
TAG = '65001:1'


def nth_prefix(n: int) -> IPv4Network:
    """ The n-th /24 inside 10.0.0.0/8. """
    return IPv4Network(f'10.{n // 256}.{n % 256}.0/24')


class NetworkBuilder:
    """ Accumulates a network one node, link and policy at a time. """

    def __init__(self, protocols=(Protocol.BGP,)):
        self.protocols = frozenset(Protocol(p) for p in protocols)
        self.nodes = {}
        self.links = []
        self.interfaces = {}
        self.policies = {}
        self.acls = {}
        self.static_routes = {}
        self.origins = {}

    def node(self, id, protocols=None):
        if id not in self.nodes:
            protocols = self.protocols if protocols is None else frozenset(protocols)
            self.nodes[id] = Node(id, BASE_ASN + len(self.nodes), protocols)
        return id

    def link(self, a, b, cost=1, area=0):
        self.node(a)
        self.node(b)
        self.links.append(Link(a, b, cost, area))

    def policy(self, id, *clauses):
        self.policies[id] = RoutePolicy(tuple(clauses))
        return id

    def interface(self, node, neighbor, import_policy=None, export_policy=None, acl=None):
        current = self.interfaces.get((node, neighbor), Interface(node, neighbor))
        self.interfaces[(node, neighbor)] = Interface(
            node, neighbor,
            import_policy if import_policy is not None else current.import_policy,
            export_policy if export_policy is not None else current.export_policy,
            acl if acl is not None else current.acl)

    def originate(self, node, prefix=FIXTURE_PREFIX):
        self.origins.setdefault(node, []).append(prefix)

    def static(self, node, next_hop, prefix=FIXTURE_PREFIX):
        self.static_routes.setdefault(node, []).append(StaticRoute(prefix, next_hop))

    def build(self) -> NetworkSpec:
        interfaces = dict(self.interfaces)
        for link in self.links:
            for owner, neighbor in ((link.a, link.b), (link.b, link.a)):
                interfaces.setdefault((owner, neighbor), Interface(owner, neighbor))
        return NetworkSpec(
            nodes=dict(sorted(self.nodes.items())),
            links=tuple(self.links),
            interfaces=dict(sorted(interfaces.items())),
            policies=dict(sorted(self.policies.items())),
            acls=dict(sorted(self.acls.items())),
            static_routes={
                node: tuple(routes) for node, routes in sorted(self.static_routes.items())},
            origins={
                node: tuple(prefixes) for node, prefixes in sorted(self.origins.items())})


def _permit(**kwargs) -> PolicyClause:
    match = PolicyMatch(**kwargs.pop('match', {}))
    return PolicyClause(match=match, permit=True, **kwargs)


def _deny(**match) -> PolicyClause:
    return PolicyClause(match=PolicyMatch(**match), permit=False)


def fattree_arity(size: int) -> int:
    """ The arity k with 5k²/4 = `size` nodes. """
    k = math.isqrt(size * 4 // 5)
    if k % 2 or 5 * k * k // 4 != size or 3 * k // 2 + 5 > k * k // 4:
        raise UnsupportedSize(f'no fattree has {size} nodes')
    return k


def fattree(size: int) -> NetworkSpec:
    """ A fattree whose ToRs each originate one /24 and refuse to learn
    their own prefix back. """
    k = fattree_arity(size)
    half, spines = k // 2, k * k // 4
    uplinks = 3 * k // 2 + 5
    builder = NetworkBuilder()
    tors = []
    for pod in range(k):
        pod_tors = [builder.node(f'p{pod:02d}-t{i:02d}') for i in range(half)]
        aggs = [builder.node(f'p{pod:02d}-a{i:02d}') for i in range(half)]
        for tor in pod_tors:
            for agg in aggs:
                builder.link(tor, agg)
        tors += pod_tors
    for s in range(spines):
        builder.node(f's{s:03d}')
    for pod in range(k):
        for j in range(half):
            for i in range(uplinks):
                builder.link(f'p{pod:02d}-a{j:02d}', f's{(half * j + i) % spines:03d}')
    for s in range(spines):
        builder.link(f's{s:03d}', f's{(s + 1) % spines:03d}')

    for n, tor in enumerate(tors):
        prefix = nth_prefix(n)
        builder.originate(tor, prefix)
        policy = builder.policy(
            f'not-{tor}', _deny(prefixes=(prefix,)), _permit())
        for link in builder.links:
            if tor in link.endpoints:
                other = link.b if link.a == tor else link.a
                builder.interface(tor, other, import_policy=policy)
    return builder.build()


def ring(size: int) -> NetworkSpec:
    if size < 3:
        raise UnsupportedSize(f'a ring needs at least 3 nodes, not {size}')
    builder = NetworkBuilder()
    names = [builder.node(f'r{i:04d}') for i in range(size)]
    for i, name in enumerate(names):
        builder.link(name, names[(i + 1) % size])
        builder.originate(name, nth_prefix(i))
    return builder.build()


def mesh(size: int) -> NetworkSpec:
    if size < 2:
        raise UnsupportedSize(f'a mesh needs at least 2 nodes, not {size}')
    builder = NetworkBuilder()
    names = [builder.node(f'm{i:04d}') for i in range(size)]
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            builder.link(a, b)
        builder.originate(a, nth_prefix(i))
    return builder.build()


def rip_diamond() -> NetworkSpec:
    """ d feeds b1 and b2, which both feed a. """
    builder = NetworkBuilder((Protocol.RIP,))
    for a, b in (('d', 'b1'), ('d', 'b2'), ('b1', 'a'), ('b2', 'a')):
        builder.link(a, b)
    builder.originate('d')
    return builder.build()


def local_pref_gadget() -> NetworkSpec:
    """ b1..b3 sit between d and a, and each prefers routes learned
    from a. """
    builder = NetworkBuilder()
    builder.node('d')
    builder.node('a')
    prefer = builder.policy('prefer-a', _permit(set_local_pref=200))
    for b in ('b1', 'b2', 'b3'):
        builder.link('d', b)
        builder.link('a', b)
        builder.interface(b, 'a', import_policy=prefer)
    builder.originate('d')
    return builder.build()


def forall_exists_example() -> NetworkSpec:
    """ d reaches b through a1 or a2; c hangs off b. """
    builder = NetworkBuilder((Protocol.RIP,))
    for a, b in (('d', 'a1'), ('d', 'a2'), ('b', 'a1'), ('b', 'a2'), ('c', 'b')):
        builder.link(a, b)
    builder.originate('d')
    return builder.build()


def community_example() -> NetworkSpec:
    """ a tags what it exports; b2 raises the preference of tagged routes. """
    builder = NetworkBuilder()
    for a, b in (('d', 'b1'), ('d', 'b2'), ('b1', 'a'), ('b2', 'a')):
        builder.link(a, b)
    tag = builder.policy('tag', _permit(add_communities=(TAG,)))
    lift = builder.policy(
        'lift-tagged',
        _permit(match={'communities': (TAG,)}, set_local_pref=200),
        _permit())
    builder.interface('a', 'b1', export_policy=tag)
    builder.interface('a', 'b2', export_policy=tag)
    builder.interface('b2', 'a', import_policy=lift)
    builder.originate('d')
    return builder.build()


def chain_gadget(levels: int) -> NetworkSpec:
    """ Three middle routers b1..b3 that can settle on `levels` distinct
    local preferences.

    Routers a1..a(levels-1) each connect to every b. a_i tags what it
    exports with tag i and prefers routes carrying tag i-1; the b routers
    prefer routes from a_i over routes from d, and higher i over lower.
    """
    if levels < 2:
        raise UnsupportedSize(f'a chain needs at least 2 levels, not {levels}')
    builder = NetworkBuilder()
    builder.node('d')
    middles = ('b1', 'b2', 'b3')
    base = builder.policy('lp-100', _permit(set_local_pref=100))
    for b in middles:
        builder.link('d', b)
        builder.interface(b, 'd', import_policy=base)
    for i in range(1, levels):
        a = f'a{i}'
        builder.node(a)
        tag = f'65001:{i}'
        export = builder.policy(f'tag-{i}', _permit(add_communities=(tag,)))
        if i == 1:
            import_ = base
        else:
            import_ = builder.policy(
                f'prefer-tag-{i - 1}',
                _permit(match={'communities': (f'65001:{i - 1}',)}, set_local_pref=200),
                _permit(set_local_pref=100))
        from_a = builder.policy(
            f'lp-{100 * (i + 1)}', _permit(set_local_pref=100 * (i + 1)))
        for b in middles:
            builder.link(a, b)
            builder.interface(a, b, import_policy=import_, export_policy=export)
            builder.interface(b, a, import_policy=from_a)
    builder.originate('d')
    return builder.build()


def bad_gadget() -> NetworkSpec:
    """ Three routers around d that each want the direct route of the
    next one: no stable solution exists. """
    builder = NetworkBuilder()
    routers = ('r1', 'r2', 'r3')
    for r in routers:
        builder.link('d', r)
    for i, r in enumerate(routers):
        builder.link(r, routers[(i + 1) % 3])
    mark = builder.policy('mark-direct', _permit(add_communities=(TAG,)))
    for r in routers:
        builder.interface('d', r, export_policy=mark)
    prefer = builder.policy(
        'prefer-direct-of-next',
        _permit(
            match={'communities': (TAG,)}, set_local_pref=200,
            delete_communities=(TAG,)),
        _deny())
    refuse = builder.policy('refuse', _deny())
    for i, r in enumerate(routers):
        builder.interface(r, routers[(i + 1) % 3], import_policy=prefer)
        builder.interface(r, routers[(i - 1) % 3], import_policy=refuse)
    builder.originate('d')
    return builder.build()


def static_loop() -> NetworkSpec:
    """ Two routers whose static routes point at each other. """
    builder = NetworkBuilder((Protocol.STATIC,))
    builder.link('d', 'x')
    builder.link('x', 'y')
    builder.static('x', 'y')
    builder.static('y', 'x')
    builder.originate('d')
    return builder.build()


UNUSED_TAG = '65002:1'

# (threshold, policy) pairs: an interface takes the first policy whose
# threshold its roll falls under.
RANDOM_IMPORTS = (
    (0.10, 'deny-fixture'),
    (0.30, 'prefer'),
    (0.40, 'lift-tagged'),
    (0.45, 'deny-tagged'),
)
RANDOM_EXPORTS = (
    (0.10, 'deny-other'),
    (0.25, 'tag'),
    (0.30, 'tag-unused'),
)


def _pick(table, roll):
    for threshold, policy in table:
        if roll < threshold:
            return policy
    return None


def _random_bgp_policies(builder: NetworkBuilder, pairs, rng: random.Random):
    builder.policy('deny-fixture', _deny(prefixes=(FIXTURE_PREFIX,)), _permit())
    builder.policy('deny-other', _deny(prefixes=(nth_prefix(1),)), _permit())
    builder.policy('prefer', _permit(set_local_pref=200))
    builder.policy(
        'lift-tagged',
        _permit(match={'communities': (TAG,)}, set_local_pref=150), _permit())
    builder.policy('deny-tagged', _deny(communities=(TAG,)), _permit())
    builder.policy('tag', _permit(add_communities=(TAG,)))
    builder.policy('tag-unused', _permit(add_communities=(UNUSED_TAG,)))
    for a, b in pairs:
        for owner, neighbor in ((a, b), (b, a)):
            builder.interface(
                owner, neighbor,
                import_policy=_pick(RANDOM_IMPORTS, rng.random()),
                export_policy=_pick(RANDOM_EXPORTS, rng.random()))


def random_network(seed: int, max_nodes: int = 8, protocol=None) -> NetworkSpec:
    """ A small connected network running one protocol.

    Nodes are `n0`..; `n0` originates the fixture prefix. BGP instances
    carry prefix filters, local-preference imports and community tagging
    (one tag that some policy matches on and one that none does), OSPF
    instances random costs and areas, static instances random static
    routes, and any instance may carry an ACL.
    """
    rng = random.Random(seed)
    if protocol is None:
        protocol = rng.choice(list(Protocol))
    protocol = Protocol(protocol)
    count = rng.randint(3, max_nodes)
    builder = NetworkBuilder((protocol,))
    names = [builder.node(f'n{i}') for i in range(count)]
    pairs = set()
    for i in range(1, count):
        pairs.add((names[rng.randrange(i)], names[i]))
    for _ in range(rng.randint(0, count)):
        a, b = rng.sample(names, 2)
        if (a, b) not in pairs and (b, a) not in pairs:
            pairs.add((a, b))
    for a, b in sorted(pairs):
        if protocol is Protocol.OSPF:
            builder.link(a, b, cost=rng.randint(1, 3), area=rng.choice((0, 0, 1)))
        else:
            builder.link(a, b)
    builder.originate(names[0])

    if protocol is Protocol.BGP:
        _random_bgp_policies(builder, sorted(pairs), rng)
    if protocol is Protocol.STATIC:
        neighbors = {u: [] for u in names}
        for a, b in sorted(pairs):
            neighbors[a].append(b)
            neighbors[b].append(a)
        for u in names[1:]:
            for v in neighbors[u]:
                if rng.random() < 0.5:
                    builder.static(u, v)
        if not builder.static_routes:
            builder.static(names[1], neighbors[names[1]][0])
    if rng.random() < 0.2:
        builder.acls['block'] = AclList((AclEntry(FIXTURE_PREFIX, False),))
        a, b = sorted(pairs)[rng.randrange(len(pairs))]
        builder.interface(a, b, acl='block')
    return builder.build()


FIXTURES = {
    'diamond': (4, lambda size: rip_diamond()),
    'gadget': (5, lambda size: local_pref_gadget()),
    'forall-exists': (5, lambda size: forall_exists_example()),
    'communities': (4, lambda size: community_example()),
    'bad-gadget': (4, lambda size: bad_gadget()),
    'static-loop': (3, lambda size: static_loop()),
}

GENERATORS = {
    'fattree': fattree,
    'ring': ring,
    'mesh': mesh,
}

KINDS = tuple(sorted(set(GENERATORS) | set(FIXTURES) | {'chain', 'random'}))


def gen(kind: str, size=None, seed: int = 0) -> NetworkSpec:
    """ The network of `kind` and `size`; pure in its arguments.

    Hand-made fixtures have one size (which `size` may omit), `chain`
    takes its number of levels as the size and `random` its node bound.
    """
    if kind in GENERATORS:
        if size is None:
            raise UnsupportedSize(f'{kind} needs a size')
        spec = GENERATORS[kind](size)
    elif kind in FIXTURES:
        natural, build = FIXTURES[kind]
        if size is not None and size != natural:
            raise UnsupportedSize(f'{kind} has {natural} nodes, not {size}')
        spec = build(size)
    elif kind == 'chain':
        spec = chain_gadget(3 if size is None else size)
    elif kind == 'random':
        bound = 8 if size is None else size
        if bound < 3:
            raise UnsupportedSize(f'random networks have at least 3 nodes, not {bound}')
        spec = random_network(seed, bound)
    else:
        raise UnsupportedSize(f'unknown topology kind {kind!r}')
    logger.debug('%s: %d nodes, %d links', kind, len(spec.nodes), len(spec.links))
    return spec
