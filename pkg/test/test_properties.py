""" Tests cpcompress.properties """

import unittest
from cpcompress import properties, topologies
from cpcompress.compress import compress_ec
from cpcompress.ecs import compute_ecs
from cpcompress.oracle import matched_pairs
from cpcompress.protocols import Protocol, RipAttr
from cpcompress.srp import Solution, enumerate_solutions, simulate_solution
from sample_networks import abstract_srp, build_srp, compress_fixture


def _solution(fwd, labelled=()):
    """ A hand-written solution: every listed node routes. """
    nodes = set(fwd) | {v for vs in fwd.values() for v in vs} | set(labelled)
    labels = {u: RipAttr(1) if u in fwd or u in labelled else None for u in nodes}
    return Solution(labels, {u: {(u, v) for v in fwd.get(u, ())} for u in nodes})


class TestQueries(unittest.TestCase):
    """ Tests each query on small forwarding graphs. """

    def setUp(self):
        spec = topologies.rip_diamond()
        self.diamond = simulate_solution(build_srp(spec, protocol=Protocol.RIP))

    def test_reachability(self):
        self.assertTrue(properties.reachability(self.diamond, 'a', 'd'))
        self.assertFalse(properties.reachability(self.diamond, 'd', 'a'))

    def test_path_lengths(self):
        """ a reaches d over both middle routers, two hops each. """
        self.assertEqual(properties.path_lengths(self.diamond, 'a', 'd'), {2})
        self.assertEqual(properties.path_lengths(self.diamond, 'd', 'd'), {0})
        self.assertEqual(properties.path_lengths(self.diamond, 'd', 'a'), frozenset())

    def test_multipath(self):
        self.assertTrue(properties.multipath_consistent(self.diamond, 'a', 'd'))
        self.assertEqual(len(properties.maximal_paths(self.diamond, 'a')), 2)

    def test_waypoint(self):
        """ Both of a's paths cross one of the middle routers. """
        self.assertTrue(properties.waypointed(self.diamond, 'a', 'd', {'b1', 'b2'}))
        self.assertFalse(properties.waypointed(self.diamond, 'a', 'd', {'b1'}))

    def test_black_hole(self):
        """ x forwards to y, which has no route. """
        sol = _solution({'u': ['x', 'd'], 'x': ['y']}, labelled={'d'})
        self.assertTrue(properties.black_holed(sol, 'u'))
        self.assertFalse(properties.multipath_consistent(sol, 'u', 'd'))
        self.assertFalse(properties.black_holed(self.diamond, 'a'))

    def test_loop(self):
        """ The static routes of x and y point at each other. """
        spec = topologies.static_loop()
        (sol,) = enumerate_solutions(build_srp(spec, protocol=Protocol.STATIC))
        self.assertTrue(properties.has_routing_loop(sol))
        self.assertFalse(properties.reachability(sol, 'x', 'd'))
        self.assertFalse(properties.has_routing_loop(self.diamond))


class TestPreserved(unittest.TestCase):
    """ Verdicts agree on matched concrete and abstract solutions. """

    def _compare(self, spec, abstract, srp):
        amap = abstract.map
        dest = amap.dest
        pairs = list(matched_pairs(
            enumerate_solutions(srp), enumerate_solutions(abstract_srp(abstract)), amap))
        self.assertTrue(pairs)
        for L, L_hat, node_map in pairs:
            self.assertEqual(
                properties.has_routing_loop(L), properties.has_routing_loop(L_hat))
            for u in sorted(L.labels):
                u_hat = node_map[u]
                msg = f'{u} -> {u_hat}'
                self.assertEqual(
                    properties.reachability(L, u, dest),
                    properties.reachability(L_hat, u_hat, dest), msg)
                self.assertEqual(
                    properties.path_lengths(L, u, dest),
                    properties.path_lengths(L_hat, u_hat, dest), msg)
                self.assertEqual(
                    properties.black_holed(L, u), properties.black_holed(L_hat, u_hat), msg)
                self.assertEqual(
                    properties.multipath_consistent(L, u, dest),
                    properties.multipath_consistent(L_hat, u_hat, dest), msg)
                for w_hat in sorted(set(node_map.values())):
                    wayset = {w for w, image in node_map.items() if image == w_hat}
                    self.assertEqual(
                        properties.waypointed(L, u, dest, wayset),
                        properties.waypointed(L_hat, u_hat, dest, {w_hat}), msg)

    def test_fixtures(self):
        for spec, protocol in (
                (topologies.rip_diamond(), Protocol.RIP),
                (topologies.forall_exists_example(), Protocol.RIP),
                (topologies.local_pref_gadget(), Protocol.BGP),
                (topologies.community_example(), Protocol.BGP),
                (topologies.chain_gadget(3), Protocol.BGP),
                (topologies.static_loop(), Protocol.STATIC)):
            abstract = compress_fixture(spec, protocol=protocol)
            self._compare(spec, abstract, build_srp(spec, protocol=protocol))

    def test_ring(self):
        spec = topologies.ring(8)
        ec = compute_ecs(spec)[0]
        abstract = compress_ec(spec, ec, 'r0000', Protocol.BGP)
        self._compare(spec, abstract, build_srp(spec, 'r0000', prefix=ec.representative_prefix))


if __name__ == '__main__':
    unittest.main()
