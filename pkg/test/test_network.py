""" Tests cpcompress.network """

from ipaddress import IPv4Network
import json
import unittest
from cpcompress import topologies
from cpcompress.errors import DanglingReference, ParseError
from cpcompress.network import (
    AclEntry, AclList, MappingRecord, PolicyClause, PolicyMatch, RoutePolicy,
    dump_mapping, dump_network_spec, network_to_dict, parse_mapping,
    parse_network_spec)
from cpcompress.protocols import AbstractionKind, AttrAbstraction, Protocol
from sample_networks import MINIMAL_DOCUMENT, sample_spec

PREFIX = IPv4Network('10.0.0.0/24')


def _document(**changes):
    document = json.loads(MINIMAL_DOCUMENT)
    document.update(changes)
    return json.dumps(document)


class TestParse(unittest.TestCase):
    """ Tests `parse_network_spec`. """

    def test_minimal(self):
        """ Two nodes and one link give two directed edges. """
        spec = sample_spec()
        self.assertEqual(set(spec.nodes), {'d', 'x'})
        self.assertEqual(spec.edges, {('d', 'x'), ('x', 'd')})
        self.assertEqual(spec.interface('x', 'd').import_policy, 'keep')
        self.assertEqual(spec.origins['d'], (PREFIX,))

    def test_interfaces_defaulted(self):
        """ Interfaces the document leaves out default to permit-all. """
        spec = sample_spec()
        record = spec.interface('d', 'x')
        self.assertIsNone(record.import_policy)
        self.assertIsNone(record.export_policy)
        self.assertIs(spec.policy(record.import_policy).clauses[0].permit, True)

    def test_dangling_policy(self):
        """ A reference to an undefined policy is reported. """
        text = _document(policies={})
        with self.assertRaises(DanglingReference) as context:
            parse_network_spec(text)
        self.assertEqual(context.exception.id, 'keep')

    def test_dangling_node(self):
        """ An edge to an undefined node is reported. """
        document = json.loads(MINIMAL_DOCUMENT)
        document['edges'][0]['endpoints'] = ['d', 'y']
        with self.assertRaises(DanglingReference):
            parse_network_spec(json.dumps(document))

    def test_unknown_field(self):
        """ Unknown fields are rejected. """
        with self.assertRaises(ParseError):
            parse_network_spec(_document(colour='blue'))

    def test_bad_json(self):
        """ Malformed JSON reports its line. """
        with self.assertRaises(ParseError) as context:
            parse_network_spec('{\n  "version": \n}')
        self.assertEqual(context.exception.line, 3)

    def test_bad_version(self):
        """ Only bonsai-net/1 documents are accepted. """
        with self.assertRaises(ParseError):
            parse_network_spec(_document(version='bonsai-net/2'))

    def test_bad_prefix(self):
        """ Prefixes with host bits set are rejected. """
        with self.assertRaises(ParseError):
            parse_network_spec(_document(origins={'d': ['10.0.0.1/24']}))

    def test_bad_ospf_cost(self):
        """ OSPF costs start at 1; the error points at the offending line. """
        with self.assertRaises(ParseError) as context:
            parse_network_spec(MINIMAL_DOCUMENT.replace('"ospf_cost": 1', '"ospf_cost": 0'))
        self.assertEqual(context.exception.line, 8)
        self.assertTrue(str(context.exception).startswith('line 8: edges.0.ospf_cost'))

    def test_unknown_field_line(self):
        """ An unknown field is reported at the line of its key. """
        document = MINIMAL_DOCUMENT.replace('  "acls": {},', '  "colour": "blue",\n  "acls": {},')
        with self.assertRaises(ParseError) as context:
            parse_network_spec(document)
        self.assertEqual(context.exception.line, 17)

    def test_self_loop(self):
        """ A link from a node to itself is rejected. """
        document = json.loads(MINIMAL_DOCUMENT)
        document['edges'][0]['endpoints'] = ['d', 'd']
        with self.assertRaises(ParseError):
            parse_network_spec(json.dumps(document))

    def test_unreachable_clause_warns(self):
        """ A clause after a catch-all is kept but reported. """
        document = json.loads(MINIMAL_DOCUMENT)
        clauses = document['policies']['keep']['clauses']
        clauses.append(dict(clauses[0], action='deny'))
        with self.assertWarns(UserWarning):
            spec = parse_network_spec(json.dumps(document))
        self.assertEqual(len(spec.policy('keep').clauses), 2)

    def test_static_route_needs_link(self):
        """ A static route must leave over an existing link. """
        document = json.loads(MINIMAL_DOCUMENT)
        document['nodes'].append({'id': 'y', 'asn': 3})
        document['static_routes'] = {'x': [{'prefix': '10.0.0.0/24', 'next_hop': 'y'}]}
        with self.assertRaises(ParseError):
            parse_network_spec(json.dumps(document))


class TestEmit(unittest.TestCase):
    """ Tests emitting documents. """

    def test_reparse_identical(self):
        """ Emitting and re-parsing a generated network changes nothing. """
        for spec in (
                topologies.community_example(), topologies.chain_gadget(3),
                topologies.static_loop(), topologies.random_network(4)):
            text = dump_network_spec(spec)
            self.assertEqual(parse_network_spec(text), spec)
            self.assertEqual(dump_network_spec(parse_network_spec(text)), text)

    def test_field_order(self):
        """ Top-level fields come out in a fixed order. """
        self.assertEqual(
            list(network_to_dict(sample_spec())),
            ['version', 'nodes', 'edges', 'policies', 'acls', 'static_routes', 'origins'])

    def test_mapping_sidecar(self):
        """ A sidecar parses back to the same record. """
        h = AttrAbstraction(
            AbstractionKind.BGP_DROP_UNUSED_TAGS, {}, frozenset({'65001:2'}))
        record = MappingRecord(
            ('a', 'b1~0', 'b1~1', 'd'),
            {'a': 'a', 'b1': 'b1', 'b2': 'b1', 'd': 'd'}, h,
            {'b1': ('b1~0', 'b1~1')})
        parsed = parse_mapping(dump_mapping(record))
        self.assertEqual(parsed.abstract_nodes, record.abstract_nodes)
        self.assertEqual(parsed.f, record.f)
        self.assertEqual(parsed.h, h)
        self.assertEqual(parsed.copies, record.copies)

    def test_mapping_dangling(self):
        """ A sidecar mapping onto an unknown node is rejected. """
        text = json.dumps({
            'abstract_nodes': ['d'], 'f': {'d': 'd', 'x': 'y'},
            'h': {'kind': 'identity', 'unused_tags': []}})
        with self.assertRaises(DanglingReference):
            parse_mapping(text)


class TestPolicies(unittest.TestCase):
    """ Tests the route-policy interpreter. """

    def setUp(self):
        self.policy = RoutePolicy((
            PolicyClause(PolicyMatch(prefixes=(IPv4Network('10.0.0.0/16'),)), permit=False),
            PolicyClause(
                PolicyMatch(communities=('1:1',)), add_communities=('1:2',),
                set_local_pref=300),
            PolicyClause(PolicyMatch(protocols=(Protocol.OSPF,)), permit=False),
            PolicyClause(delete_communities=('1:3',)),
        ))

    def test_prefix_deny(self):
        """ The first clause drops routes inside 10.0.0.0/16. """
        self.assertIsNone(self.policy.evaluate((), 100, PREFIX, Protocol.BGP))

    def test_community_match(self):
        """ Tagged routes are re-tagged and preferred. """
        out = self.policy.evaluate(
            {'1:1'}, 100, IPv4Network('192.168.0.0/24'), Protocol.BGP)
        self.assertEqual(out, (frozenset({'1:1', '1:2'}), 300))

    def test_protocol_match(self):
        """ Protocol tags select clauses. """
        other = IPv4Network('192.168.0.0/24')
        self.assertIsNone(self.policy.evaluate((), 100, other, Protocol.OSPF))
        self.assertEqual(
            self.policy.evaluate({'1:3'}, 100, other, Protocol.BGP), (frozenset(), 100))

    def test_specialize_agrees(self):
        """ The specialized policy agrees with direct evaluation. """
        other = IPv4Network('192.168.0.0/24')
        specialized = self.policy.specialize(other, Protocol.BGP)
        for communities in ((), ('1:1',), ('1:3',), ('1:1', '1:3')):
            self.assertEqual(
                specialized.apply(frozenset(communities), 100),
                self.policy.evaluate(communities, 100, other, Protocol.BGP))

    def test_local_prefs(self):
        """ Reachable set-local-pref constants are collected. """
        specialized = self.policy.specialize(IPv4Network('192.168.0.0/24'), Protocol.BGP)
        self.assertEqual(specialized.local_prefs(), {300})

    def test_without_tags(self):
        """ Stripping a tag removes its add and delete actions. """
        stripped = self.policy.without_tags({'1:2', '1:3'})
        self.assertEqual(stripped.clauses[1].add_communities, ())
        self.assertEqual(stripped.clauses[3].delete_communities, ())

    def test_acl_implicit_deny(self):
        """ ACLs deny what no entry covers. """
        acl = AclList((AclEntry(IPv4Network('10.0.0.0/8'), True),))
        self.assertTrue(acl.permits(PREFIX))
        self.assertFalse(acl.permits(IPv4Network('192.168.0.0/24')))


class TestSpecQueries(unittest.TestCase):
    """ Tests `NetworkSpec` helpers. """

    def test_unused_communities(self):
        """ A tag nobody matches on is unused. """
        spec = topologies.chain_gadget(3)
        self.assertEqual(spec.unused_communities(), {'65001:2'})
        self.assertIn('65001:1', spec.communities())

    def test_local_prefs(self):
        """ The default and every constant set anywhere. """
        self.assertEqual(topologies.chain_gadget(3).local_prefs(), {100, 200, 300})


if __name__ == '__main__':
    unittest.main()
