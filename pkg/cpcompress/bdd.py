""" Reduced ordered BDDs and the route-policy compiler.

Nodes are hash-consed in a unique table, so two functions over the same
layout are equal exactly when their ids are equal. A compiled policy is
a relation over input route fields (unprimed variables), output fields
(primed variables) and a drop bit.
"""

from dataclasses import dataclass, field
from typing import Optional
import itertools
import logging
from cpcompress.errors import LayoutMiss, LayoutMismatch
from cpcompress.network import AclList, RoutePolicy, community_key
from cpcompress.protocols import DEFAULT_LOCAL_PREF, Protocol

logger = logging.getLogger(__name__)

FALSE = 0
TRUE = 1


@dataclass(frozen=True)
class VarLayout:
    """ Variable order for one destination class.

    Community bits come first, then one-hot local preference bits, then
    protocol-tag bits, then the drop bit. Every primed (output) variable
    directly follows its unprimed partner. Communities in `ignored` are
    known but deliberately not encoded.
    """
    communities: tuple = ()
    local_prefs: tuple = (DEFAULT_LOCAL_PREF,)
    protocols: tuple = ()
    ignored: frozenset = frozenset()

    @property
    def names(self) -> tuple:
        names = []
        for community in self.communities:
            names += [f'c{community}', f"c{community}'"]
        for lp in self.local_prefs:
            names += [f'lp{lp}', f"lp{lp}'"]
        for protocol in self.protocols:
            names.append(f'proto:{Protocol(protocol).value}')
        names.append('drop')
        return tuple(names)

    def __len__(self):
        return len(self.names)

    def community(self, community: str, primed: bool = False) -> int:
        if community not in self.communities:
            raise LayoutMiss(community)
        return 2 * self.communities.index(community) + int(primed)

    def local_pref(self, lp: int, primed: bool = False) -> int:
        if lp not in self.local_prefs:
            raise LayoutMiss(lp)
        return 2 * len(self.communities) + 2 * self.local_prefs.index(lp) + int(primed)

    def protocol(self, protocol) -> int:
        protocol = Protocol(protocol)
        if protocol not in self.protocols:
            raise LayoutMiss(protocol.value)
        base = 2 * len(self.communities) + 2 * len(self.local_prefs)
        return base + self.protocols.index(protocol)

    @property
    def drop(self) -> int:
        return len(self.names) - 1

    @property
    def inputs(self) -> tuple:
        """ Levels of the unprimed variables (including protocol tags). """
        primed = len(self.communities) + len(self.local_prefs)
        return tuple(range(0, 2 * primed, 2)) + tuple(
            range(2 * primed, 2 * primed + len(self.protocols)))

    @classmethod
    def for_spec(cls, spec, drop_unused: bool = False) -> 'VarLayout':
        """ The layout covering every symbol `spec` mentions. """
        ignored = spec.unused_communities() if drop_unused else frozenset()
        communities = tuple(c for c in spec.communities() if c not in ignored)
        return cls(
            communities=tuple(sorted(communities, key=community_key)),
            local_prefs=tuple(sorted(spec.local_prefs())),
            protocols=tuple(sorted(
                (Protocol(p) for p in spec.protocols()), key=lambda p: p.value)),
            ignored=frozenset(ignored))


class BddManager:
    """ Owns the node store, unique table and operation caches. """

    def __init__(self, layout: VarLayout):
        self.layout = layout
        terminal_level = len(layout)
        # Terminals sit below every variable:
        self._nodes = [(terminal_level, None, None), (terminal_level, None, None)]
        self._unique = {}
        self._ite_cache = {}

    def __len__(self):
        return len(self._nodes)

    def level(self, u: int) -> int:
        return self._nodes[u][0]

    def low(self, u: int) -> int:
        return self._nodes[u][1]

    def high(self, u: int) -> int:
        return self._nodes[u][2]

    def mk(self, level: int, low: int, high: int) -> int:
        """ The unique node for (level, low, high). """
        if low == high:
            return low
        key = (level, low, high)
        u = self._unique.get(key)
        if u is None:
            u = len(self._nodes)
            self._nodes.append(key)
            self._unique[key] = u
        return u

    def var(self, level: int) -> int:
        return self.mk(level, FALSE, TRUE)

    def _cofactors(self, u: int, level: int):
        if self.level(u) != level:
            return u, u
        return self.low(u), self.high(u)

    def ite(self, f: int, g: int, h: int) -> int:
        """ if f then g else h. """
        if f == TRUE:
            return g
        if f == FALSE:
            return h
        if g == h:
            return g
        if g == TRUE and h == FALSE:
            return f
        key = (f, g, h)
        cached = self._ite_cache.get(key)
        if cached is not None:
            return cached
        top = min(self.level(f), self.level(g), self.level(h))
        f0, f1 = self._cofactors(f, top)
        g0, g1 = self._cofactors(g, top)
        h0, h1 = self._cofactors(h, top)
        result = self.mk(top, self.ite(f0, g0, h0), self.ite(f1, g1, h1))
        self._ite_cache[key] = result
        return result

    def not_(self, f: int) -> int:
        return self.ite(f, FALSE, TRUE)

    def and_(self, f: int, g: int) -> int:
        return self.ite(f, g, FALSE)

    def or_(self, f: int, g: int) -> int:
        return self.ite(f, TRUE, g)

    def iff(self, f: int, g: int) -> int:
        return self.ite(f, g, self.not_(g))

    def conjoin(self, terms) -> int:
        # Fold from the bottom of the order up:
        result = TRUE
        for term in sorted(terms, key=self.level, reverse=True):
            result = self.and_(term, result)
        return result

    def disjoin(self, terms) -> int:
        result = FALSE
        for term in terms:
            result = self.or_(term, result)
        return result

    def restrict(self, u: int, assignment: dict) -> int:
        """ Fixes the variables in `assignment` (level -> bool). """
        if not assignment:
            return u
        memo = {}

        def walk(node):
            if node in (FALSE, TRUE):
                return node
            if node in memo:
                return memo[node]
            level, low, high = self._nodes[node]
            if level in assignment:
                result = walk(high if assignment[level] else low)
            else:
                result = self.mk(level, walk(low), walk(high))
            memo[node] = result
            return result

        return walk(u)

    def evaluate(self, u: int, valuation) -> bool:
        """ Follows `valuation` (level -> bool, or a sequence) to a leaf. """
        while u not in (FALSE, TRUE):
            level, low, high = self._nodes[u]
            u = high if valuation[level] else low
        return u == TRUE

    def truth_table(self, u: int) -> tuple:
        """ Value under every assignment of every layout variable. """
        count = len(self.layout)
        return tuple(
            self.evaluate(u, bits)
            for bits in itertools.product((False, True), repeat=count))

    def reachable(self, u: int) -> list:
        """ Internal nodes reachable from `u`, in discovery order. """
        seen, order, stack = set(), [], [u]
        while stack:
            node = stack.pop()
            if node in (FALSE, TRUE) or node in seen:
                continue
            seen.add(node)
            order.append(node)
            stack.extend((self.high(node), self.low(node)))
        return order

    def is_canonical(self) -> bool:
        """ No redundant node and no duplicate triple. """
        triples = set()
        for level, low, high in self._nodes[2:]:
            if low == high or (level, low, high) in triples:
                return False
            if self.level(low) <= level or self.level(high) <= level:
                return False
            triples.add((level, low, high))
        return True


@dataclass(frozen=True)
class PolicyRelation:
    """ A compiled transfer relation: a node id in one manager. """
    id: int
    manager: BddManager = field(compare=False, repr=False)

    @property
    def layout(self) -> VarLayout:
        return self.manager.layout


def bdd_equal(a: PolicyRelation, b: PolicyRelation) -> bool:
    """ Semantic equality of two relations from the same manager. """
    if a.manager is not b.manager or a.layout != b.layout:
        raise LayoutMismatch('relations come from different managers')
    return a.id == b.id


def restrict(rel: PolicyRelation, assignment: dict) -> PolicyRelation:
    """ Fixes variables of `rel`; keys are variable names or levels. """
    names = rel.layout.names
    levels = {
        (names.index(key) if isinstance(key, str) else key): bool(value)
        for key, value in assignment.items()}
    return PolicyRelation(rel.manager.restrict(rel.id, levels), rel.manager)


def _check_symbols(layout: VarLayout, policy: RoutePolicy):
    for clause in policy.clauses:
        for community in clause.match.communities:
            layout.community(community)
        for community in clause.add_communities + clause.delete_communities:
            if community not in layout.ignored:
                layout.community(community)
        if clause.set_local_pref is not None:
            layout.local_pref(clause.set_local_pref)
        for protocol in clause.match.protocols:
            layout.protocol(protocol)


def drop_relation(manager: BddManager) -> int:
    return manager.var(manager.layout.drop)


def _permit_relation(manager: BddManager, clause) -> int:
    """ drop' false and every output field set from the clause. """
    layout = manager.layout
    terms = [manager.not_(manager.var(layout.drop))]
    added, deleted = set(clause.add_communities), set(clause.delete_communities)
    for community in layout.communities:
        out = manager.var(layout.community(community, primed=True))
        if community in added:
            terms.append(out)
        elif community in deleted:
            terms.append(manager.not_(out))
        else:
            terms.append(manager.iff(out, manager.var(layout.community(community))))
    for lp in layout.local_prefs:
        out = manager.var(layout.local_pref(lp, primed=True))
        if clause.set_local_pref is None:
            terms.append(manager.iff(out, manager.var(layout.local_pref(lp))))
        elif clause.set_local_pref == lp:
            terms.append(out)
        else:
            terms.append(manager.not_(out))
    return manager.conjoin(terms)


def compile_policy(
        policy: Optional[RoutePolicy], acl: Optional[AclList], ec,
        manager: BddManager, protocol=None) -> PolicyRelation:
    """ Compiles a policy (and optional ACL) for one destination class.

    Prefix matches are resolved against the class's representative
    prefix. Protocol-tag matches stay symbolic unless `protocol` is
    given, in which case the tag bits are restricted to it.
    """
    from cpcompress.network import PERMIT_ALL_POLICY
    layout = manager.layout
    policy = PERMIT_ALL_POLICY if policy is None else policy
    _check_symbols(layout, policy)
    prefix = ec.representative_prefix

    specialized = policy.specialize(prefix)
    relation = drop_relation(manager)  # no clause matched
    for clause in reversed(specialized.clauses):
        condition = TRUE
        if clause.communities is not None:
            condition = manager.disjoin(
                manager.var(layout.community(c)) for c in sorted(clause.communities))
        if clause.protocols is not None:
            condition = manager.and_(condition, manager.disjoin(
                manager.var(layout.protocol(p)) for p in clause.protocols))
        if clause.clause.permit:
            action = _permit_relation(manager, clause.clause)
        else:
            action = drop_relation(manager)
        relation = manager.ite(condition, action, relation)

    if acl is not None and not acl.permits(prefix):
        relation = drop_relation(manager)

    if protocol is not None and layout.protocols:
        protocol = Protocol(protocol)
        relation = manager.restrict(relation, {
            layout.protocol(p): p == protocol for p in layout.protocols})
    return PolicyRelation(relation, manager)


def route_minterm(
        manager: BddManager, communities, lp: int, primed: bool) -> int:
    """ The cube fixing every community and lp bit to one route. """
    layout = manager.layout
    terms = []
    for community in layout.communities:
        bit = manager.var(layout.community(community, primed))
        terms.append(bit if community in communities else manager.not_(bit))
    for value in layout.local_prefs:
        bit = manager.var(layout.local_pref(value, primed))
        terms.append(bit if value == lp else manager.not_(bit))
    return manager.conjoin(terms)


def apply_relation(rel: PolicyRelation, communities, lp: int, protocol=None):
    """ Reads the output route off a relation, or None when dropped. """
    manager, layout = rel.manager, rel.layout
    assignment = {}
    for community in layout.communities:
        assignment[layout.community(community)] = community in communities
    for value in layout.local_prefs:
        assignment[layout.local_pref(value)] = value == lp
    for p in layout.protocols:
        assignment[layout.protocol(p)] = protocol is not None and p == Protocol(protocol)
    outputs = manager.restrict(rel.id, assignment)
    if manager.restrict(outputs, {layout.drop: True}) != FALSE:
        return None
    outputs = manager.restrict(outputs, {layout.drop: False})
    out_communities = set()
    out_lp = None
    for community in layout.communities:
        level = layout.community(community, primed=True)
        if manager.restrict(outputs, {level: False}) == FALSE:
            out_communities.add(community)
    for value in layout.local_prefs:
        level = layout.local_pref(value, primed=True)
        if manager.restrict(outputs, {level: False}) == FALSE:
            out_lp = value
    return frozenset(out_communities), out_lp
