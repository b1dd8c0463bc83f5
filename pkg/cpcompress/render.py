""" Text and JSON reports for the command-line tool. """

from jinja2 import Environment, PackageLoader
from cpcompress.bdd import PolicyRelation
from cpcompress.protocols import BgpAttr, OspfAttr, RipAttr, StaticAttr
from cpcompress.network import community_key

env = Environment(
    loader=PackageLoader("cpcompress"),
    trim_blocks=True)

NO_ROUTE = '⊥'


def describe_attr(attr) -> str:
    """ A compact, stable rendering of an attribute. """
    if attr is None:
        return NO_ROUTE
    if isinstance(attr, RipAttr):
        return f'hops={attr.hops}'
    if isinstance(attr, OspfAttr):
        return f'cost={attr.cost}' + (' inter-area' if attr.inter_area else '')
    if isinstance(attr, StaticAttr):
        return 'static'
    if isinstance(attr, BgpAttr):
        text = f'lp={attr.lp} path=[{" ".join(attr.as_path)}]'
        if attr.communities:
            text += ' tags={' + ','.join(
                sorted(attr.communities, key=community_key)) + '}'
        return text
    return repr(attr)


def attr_to_json(attr):
    if attr is None:
        return None
    if isinstance(attr, StaticAttr):
        return {'static': True}
    if isinstance(attr, RipAttr):
        return {'hops': attr.hops}
    if isinstance(attr, OspfAttr):
        return {'cost': attr.cost, 'inter_area': attr.inter_area}
    return {
        'lp': attr.lp,
        'communities': sorted(attr.communities, key=community_key),
        'as_path': list(attr.as_path),
    }


def compress_row(abstract) -> dict:
    return {
        'ec': str(abstract.ec),
        'dest': abstract.dest,
        'protocol': abstract.protocol.value,
        'concrete_nodes': abstract.concrete_size[0],
        'concrete_edges': abstract.concrete_size[1],
        'abstract_nodes': abstract.abstract_size[0],
        'abstract_edges': abstract.abstract_size[1],
        'node_ratio': abstract.node_ratio,
        'edge_ratio': abstract.edge_ratio,
    }


def compress_report(abstracts) -> dict:
    rows = [compress_row(abstract) for abstract in abstracts]
    count = max(1, len(rows))
    return {
        'rows': rows,
        'total': {
            'jobs': len(rows),
            'abstract_nodes': sum(row['abstract_nodes'] for row in rows) / count,
            'abstract_edges': sum(row['abstract_edges'] for row in rows) / count,
        },
    }


def render_compress(abstracts) -> str:
    template = env.get_template("compress.txt")
    return template.render(compress_report(abstracts))


def solution_rows(solution) -> list:
    return [{
        'node': u,
        'label': describe_attr(solution.labels[u]),
        'next_hops': sorted(v for _, v in solution.fwd_edges.get(u, ())),
    } for u in sorted(solution.labels)]


def solution_to_json(solution) -> dict:
    return {
        u: {
            'label': attr_to_json(solution.labels[u]),
            'fwd': sorted(v for _, v in solution.fwd_edges.get(u, ())),
        } for u in sorted(solution.labels)}


def render_solutions(jobs) -> str:
    """ `jobs` holds dicts of ec, dest, protocol, solutions and error. """
    template = env.get_template("solutions.txt")
    return template.render(jobs=[
        dict(job, solutions=[solution_rows(s) for s in job['solutions']])
        for job in jobs])


def render_properties(results) -> str:
    template = env.get_template("properties.txt")
    return template.render(results=results)


def render_check(checks) -> str:
    template = env.get_template("check.txt")
    return template.render(checks=checks)


def relation_dot(rel: PolicyRelation) -> str:
    """ Graphviz source for the BDD of a compiled relation. """
    manager = rel.manager
    names = rel.layout.names
    nodes = [{
        'id': u,
        'name': names[manager.level(u)],
        'low': manager.low(u),
        'high': manager.high(u),
    } for u in manager.reachable(rel.id)]
    template = env.get_template("relation.dot")
    return template.render(nodes=nodes)
