""" Provides small networks and helpers shared by the test modules. """

from ipaddress import IPv4Network
from cpcompress.compress import compress_ec, edge_relations
from cpcompress.ecs import SrpFactory, compute_ecs, find_ec
from cpcompress.network import parse_network_spec
from cpcompress.protocols import Protocol
from cpcompress.topologies import FIXTURE_PREFIX, NetworkBuilder, _permit

# A two-router network with every field of the document format:
MINIMAL_DOCUMENT = """{
  "version": "bonsai-net/1",
  "nodes": [
    {"id": "d", "asn": 1, "protocols": ["bgp"]},
    {"id": "x", "asn": 2, "protocols": ["bgp"]}
  ],
  "edges": [
    {"endpoints": ["d", "x"], "ospf_cost": 1, "ospf_area": 0,
     "interfaces": {"x": {"import_policy": "keep", "export_policy": null, "acl": null}}}
  ],
  "policies": {
    "keep": {"clauses": [
      {"match": {"prefixes": [], "communities": [], "protocols": []},
       "action": "permit", "add_communities": [], "delete_communities": [],
       "set_local_pref": null}]}
  },
  "acls": {},
  "static_routes": {},
  "origins": {"d": ["10.0.0.0/24"]}
}
"""


def sample_spec():
    return parse_network_spec(MINIMAL_DOCUMENT)


def fixture_ec(spec, prefix=FIXTURE_PREFIX):
    return find_ec(compute_ecs(spec), IPv4Network(prefix))


def build_srp(spec, dest='d', protocol=Protocol.BGP, prefix=FIXTURE_PREFIX):
    """ The SRP of `spec` towards `dest` for the class of `prefix`. """
    return SrpFactory(spec, fixture_ec(spec, prefix)).build(dest, protocol)


def relations_for(spec, dest='d', protocol=Protocol.BGP, prefix=FIXTURE_PREFIX):
    return edge_relations(spec, fixture_ec(spec, prefix), dest, protocol)


def compress_fixture(spec, dest='d', protocol=Protocol.BGP, prefix=FIXTURE_PREFIX):
    return compress_ec(spec, fixture_ec(spec, prefix), dest, protocol)


def abstract_srp(abstract):
    """ The SRP of a compressed network, towards its destination. """
    spec = abstract.spec
    ec = find_ec(compute_ecs(spec), abstract.ec.representative_prefix)
    return SrpFactory(spec, ec).build(abstract.map.dest, abstract.protocol)


def preferring_hub():
    """ b1..b3 sit between d and a; a prefers whatever the b routers send,
    which the b routers themselves rank at the default preference. """
    builder = NetworkBuilder()
    builder.node('d')
    builder.node('a')
    prefer = builder.policy('prefer-b', _permit(set_local_pref=200))
    for b in ('b1', 'b2', 'b3'):
        builder.link('d', b)
        builder.link('a', b)
        builder.interface('a', b, import_policy=prefer)
    builder.originate('d')
    return builder.build()
