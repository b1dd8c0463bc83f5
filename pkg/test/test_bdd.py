""" Tests cpcompress.bdd """

from ipaddress import IPv4Network
import itertools
import random
import unittest
from cpcompress import topologies
from cpcompress.bdd import (
    FALSE, BddManager, VarLayout, apply_relation, bdd_equal, compile_policy,
    drop_relation, restrict)
from cpcompress.ecs import DestEquivClass
from cpcompress.errors import LayoutMismatch, LayoutMiss
from cpcompress.network import (
    AclEntry, AclList, PolicyClause, PolicyMatch, RoutePolicy)
from cpcompress.protocols import Protocol
from cpcompress.render import relation_dot

PREFIX = IPv4Network('10.0.0.0/24')
OTHER = IPv4Network('10.1.0.0/16')
EC = DestEquivClass((PREFIX,), frozenset({'d'}), PREFIX)

# Adds a tag and raises the preference of routes carrying either of two
# others:
TAGGING_POLICY = RoutePolicy((
    PolicyClause(
        PolicyMatch(communities=('65001:1', '65001:2')),
        add_communities=('65001:3',), set_local_pref=350),
))


def random_policy(rng: random.Random, communities, local_prefs) -> RoutePolicy:
    """ Up to four clauses mixing every kind of match and action. """
    clauses = []
    for _ in range(rng.randint(1, 4)):
        match = PolicyMatch(
            prefixes=rng.choice(((), (PREFIX,), (OTHER,), (IPv4Network('10.0.0.0/8'),))),
            communities=tuple(c for c in communities if rng.random() < 0.3))
        clauses.append(PolicyClause(
            match=match,
            permit=rng.random() < 0.75,
            add_communities=tuple(c for c in communities if rng.random() < 0.2),
            delete_communities=tuple(c for c in communities if rng.random() < 0.2),
            set_local_pref=rng.choice((None, None) + tuple(local_prefs))))
    return RoutePolicy(tuple(clauses))


def all_routes(layout: VarLayout):
    """ Every (communities, lp) input over a layout. """
    for bits in itertools.product((False, True), repeat=len(layout.communities)):
        communities = frozenset(c for c, bit in zip(layout.communities, bits) if bit)
        for lp in layout.local_prefs:
            yield communities, lp


class TestManager(unittest.TestCase):
    """ Tests the BDD engine. """

    def setUp(self):
        self.manager = BddManager(VarLayout(('1:1', '1:2'), (100,)))

    def test_hash_consing(self):
        """ Building the same function twice gives the same node. """
        m = self.manager
        a, b = m.var(0), m.var(2)
        self.assertEqual(m.and_(a, b), m.and_(b, a))
        self.assertEqual(m.or_(a, m.not_(a)), 1)
        self.assertEqual(m.and_(a, m.not_(a)), FALSE)

    def test_restrict(self):
        """ Fixing a variable takes the matching branch. """
        m = self.manager
        f = m.and_(m.var(0), m.var(2))
        self.assertEqual(m.restrict(f, {0: True}), m.var(2))
        self.assertEqual(m.restrict(f, {0: False}), FALSE)

    def test_canonical(self):
        """ The node store never holds redundant or duplicate nodes. """
        m = self.manager
        rng = random.Random(3)
        for _ in range(50):
            terms = [m.var(rng.randrange(len(m.layout))) for _ in range(4)]
            m.or_(m.conjoin(terms[:2]), m.iff(terms[2], terms[3]))
        self.assertTrue(m.is_canonical())


class TestCompile(unittest.TestCase):
    """ Tests `compile_policy`. """

    def setUp(self):
        layout = VarLayout(('65001:1', '65001:2', '65001:3'), (100, 350))
        self.manager = BddManager(layout)

    def test_tagging_policy(self):
        """ Tagged routes gain a tag and local preference 350. """
        rel = compile_policy(TAGGING_POLICY, None, EC, self.manager)
        self.assertEqual(
            apply_relation(rel, {'65001:1'}, 100),
            (frozenset({'65001:1', '65001:3'}), 350))
        self.assertEqual(
            apply_relation(rel, {'65001:2', '65001:3'}, 350),
            (frozenset({'65001:2', '65001:3'}), 350))

    def test_no_clause_matches(self):
        """ Untagged routes match nothing and are dropped. """
        rel = compile_policy(TAGGING_POLICY, None, EC, self.manager)
        self.assertIsNone(apply_relation(rel, frozenset(), 100))

    def test_permit_all(self):
        """ No policy passes every route through unchanged. """
        rel = compile_policy(None, None, EC, self.manager)
        for communities, lp in all_routes(self.manager.layout):
            self.assertEqual(apply_relation(rel, communities, lp), (communities, lp))
        self.assertEqual(restrict(rel, {'drop': True}).id, FALSE)

    def test_acl_drops_everything(self):
        """ An ACL denying the class turns the relation into drop. """
        acl = AclList((AclEntry(PREFIX, False),))
        rel = compile_policy(None, acl, EC, self.manager)
        self.assertEqual(rel.id, drop_relation(self.manager))

    def test_acl_permits(self):
        """ An ACL permitting the class changes nothing. """
        acl = AclList((AclEntry(IPv4Network('10.0.0.0/8'), True),))
        self.assertTrue(bdd_equal(
            compile_policy(TAGGING_POLICY, acl, EC, self.manager),
            compile_policy(TAGGING_POLICY, None, EC, self.manager)))

    def test_prefix_resolved(self):
        """ Clauses for other prefixes don't affect the class. """
        policy = RoutePolicy((
            PolicyClause(PolicyMatch(prefixes=(OTHER,)), permit=False),
            PolicyClause()))
        self.assertTrue(bdd_equal(
            compile_policy(policy, None, EC, self.manager),
            compile_policy(None, None, EC, self.manager)))

    def test_layout_miss(self):
        """ A community outside the layout is an error. """
        policy = RoutePolicy((PolicyClause(add_communities=('9:9',)),))
        with self.assertRaises(LayoutMiss):
            compile_policy(policy, None, EC, self.manager)

    def test_layout_mismatch(self):
        """ Relations from different managers can't be compared. """
        other = BddManager(self.manager.layout)
        with self.assertRaises(LayoutMismatch):
            bdd_equal(
                compile_policy(None, None, EC, self.manager),
                compile_policy(None, None, EC, other))

    def test_protocol_tags(self):
        """ Protocol matches are restricted once a protocol is given. """
        manager = BddManager(VarLayout(
            (), (100,), (Protocol.BGP, Protocol.OSPF)))
        policy = RoutePolicy((
            PolicyClause(PolicyMatch(protocols=(Protocol.OSPF,)), permit=False),
            PolicyClause()))
        for_bgp = compile_policy(policy, None, EC, manager, Protocol.BGP)
        for_ospf = compile_policy(policy, None, EC, manager, Protocol.OSPF)
        self.assertEqual(for_ospf.id, drop_relation(manager))
        self.assertIsNotNone(apply_relation(for_bgp, frozenset(), 100))

    def test_unused_tags_ignored(self):
        """ Policies differing only in unused tags compile identically. """
        spec = topologies.chain_gadget(3)
        layout = VarLayout.for_spec(spec, drop_unused=True)
        self.assertEqual(layout.communities, ('65001:1',))
        manager = BddManager(layout)
        self.assertTrue(bdd_equal(
            compile_policy(spec.policy('tag-2'), None, EC, manager),
            compile_policy(None, None, EC, manager)))
        self.assertFalse(bdd_equal(
            compile_policy(spec.policy('tag-1'), None, EC, manager),
            compile_policy(None, None, EC, manager)))

    def test_dot(self):
        """ The DOT dump names the variables of the relation. """
        rel = compile_policy(TAGGING_POLICY, None, EC, self.manager)
        dot = relation_dot(rel)
        self.assertTrue(dot.startswith('digraph relation {'))
        self.assertIn('"c65001:1"', dot)
        self.assertIn("\"lp350'\"", dot)


class TestDifferential(unittest.TestCase):
    """ Compares compiled relations against the policy interpreter. """

    def test_agrees_with_interpreter(self):
        """ 200 random policies agree with direct evaluation everywhere. """
        rng = random.Random(2024)
        for _ in range(200):
            communities = tuple(f'65001:{i}' for i in range(rng.randint(1, 8)))
            local_prefs = (100,) + tuple(sorted(rng.sample((150, 200, 300), rng.randint(0, 3))))
            layout = VarLayout(communities, local_prefs)
            manager = BddManager(layout)
            policy = random_policy(rng, communities, local_prefs)
            rel = compile_policy(policy, None, EC, manager)
            for route in all_routes(layout):
                self.assertEqual(
                    apply_relation(rel, *route),
                    policy.evaluate(route[0], route[1], PREFIX, None),
                    msg=f'{policy} on {route}')

    def test_equality_matches_truth_tables(self):
        """ Relations are equal exactly when their truth tables are. """
        rng = random.Random(99)
        communities = ('65001:1', '65001:2', '65001:3')
        local_prefs = (100, 200)
        manager = BddManager(VarLayout(communities, local_prefs))
        self.assertLessEqual(len(manager.layout), 16)
        for _ in range(100):
            first = random_policy(rng, communities, local_prefs)
            second = random_policy(rng, communities, local_prefs)
            a = compile_policy(first, None, EC, manager)
            b = compile_policy(second, None, EC, manager)
            self.assertEqual(
                bdd_equal(a, b),
                manager.truth_table(a.id) == manager.truth_table(b.id))
            # A clause after a catch-all never matches:
            padded = RoutePolicy(first.clauses + (PolicyClause(), PolicyClause(permit=False)))
            if any(not c.match.prefixes and not c.match.communities for c in first.clauses):
                self.assertTrue(bdd_equal(a, compile_policy(padded, None, EC, manager)))


if __name__ == '__main__':
    unittest.main()
