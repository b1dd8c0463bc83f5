""" Forwarding properties that an equivalent abstraction preserves.

All checks read the forwarding graph of one stable solution, with
every forwarding edge of a node included (multipath).
"""

import networkx as nx
from cpcompress.srp import Solution, forwarding_graph


def reachability(sol: Solution, u, v) -> bool:
    """ True iff some forwarding path leads from `u` to `v`. """
    if u == v:
        return True
    graph = forwarding_graph(sol)
    return u in graph and v in graph and nx.has_path(graph, u, v)


def path_lengths(sol: Solution, u, v) -> frozenset:
    """ Hop counts of every simple forwarding path from `u` to `v`. """
    if u == v:
        return frozenset({0})
    graph = forwarding_graph(sol)
    if u not in graph or v not in graph:
        return frozenset()
    return frozenset(len(path) - 1 for path in nx.all_simple_paths(graph, u, v))


def maximal_paths(sol: Solution, u) -> list:
    """ Simple forwarding paths from `u` that cannot be extended. """
    graph = forwarding_graph(sol)
    paths = []
    stack = [[u]]
    while stack:
        path = stack.pop()
        onward = [v for v in sorted(graph.successors(path[-1])) if v not in path]
        if not onward:
            paths.append(path)
        for v in reversed(onward):
            stack.append(path + [v])
    return paths


def has_black_hole(sol: Solution, path) -> bool:
    """ True iff `path` ends at a node without a route. """
    return bool(path) and sol.labels.get(path[-1]) is None


def black_holed(sol: Solution, u) -> bool:
    """ True iff some forwarding path from `u` ends in a black hole. """
    return any(has_black_hole(sol, path) for path in maximal_paths(sol, u))


def multipath_consistent(sol: Solution, u, v) -> bool:
    """ False iff `u` reaches `v` along one path but is dropped along
    another. """
    paths = maximal_paths(sol, u)
    delivered = any(path[-1] == v for path in paths)
    dropped = any(has_black_hole(sol, path) for path in paths)
    return not (delivered and dropped)


def waypointed(sol: Solution, u, v, wayset) -> bool:
    """ True iff `u` reaches `v` and every path between them crosses
    `wayset`. """
    if not reachability(sol, u, v):
        return False
    wayset = set(wayset)
    if u == v:
        return u in wayset
    graph = forwarding_graph(sol)
    return all(
        wayset.intersection(path) for path in nx.all_simple_paths(graph, u, v))


def has_routing_loop(sol: Solution) -> bool:
    return not nx.is_directed_acyclic_graph(forwarding_graph(sol))


QUERIES = (
    'reach', 'pathlen', 'blackhole', 'multipath', 'waypoint', 'loop')
