""" The `cpcompress` command-line tool.

Exit codes: 0 when everything passed, 1 when a check found a violation
(or a network diverged), 2 for unusable input. Input errors are also
reported as a one-line JSON record on stderr.
"""

from ipaddress import IPv4Network
import concurrent.futures
import json
import logging
import os
import warnings
import click
from cpcompress import properties as props
from cpcompress import render
from cpcompress.compress import (
    AbstractionMap, certify, compression_jobs, edge_relations, run_job)
from cpcompress.config import load_config
from cpcompress.ecs import SrpFactory, compute_ecs, find_ec, specialize_spec
from cpcompress.errors import (
    CertificateMissing, CompressError, Divergence, InstanceTooLarge)
from cpcompress.network import (
    dump_network_spec, emit_network_spec, parse_mapping, parse_network_spec)
from cpcompress.oracle import check_cp_equivalence
from cpcompress.protocols import Protocol
from cpcompress.srp import (
    enumerate_solutions, highest_id, lowest_id, simulate_solution)
from cpcompress.topologies import KINDS, gen as generate

logger = logging.getLogger(__name__)

EXIT_VIOLATION = 1
EXIT_USAGE = 2

# Failures that are findings about the network rather than bad input:
VIOLATIONS = (CertificateMissing, Divergence)

TIE_BREAKS = {'lowest': lowest_id, 'highest': highest_id}


def _error_record(error) -> str:
    return json.dumps({'error': type(error).__name__, 'detail': str(error)})


class CompressGroup(click.Group):
    """ Maps package errors onto exit codes. """

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as error:
            click.echo(_error_record(error), err=True)
            raise
        except VIOLATIONS as error:
            click.echo(_error_record(error), err=True)
            ctx.exit(EXIT_VIOLATION)
        except CompressError as error:
            click.echo(_error_record(error), err=True)
            ctx.exit(EXIT_USAGE)


def _read_spec(path):
    with open(path, encoding='utf-8') as f:
        return parse_network_spec(f.read())


def _select_ecs(spec, prefix):
    ecs = compute_ecs(spec)
    if prefix is None:
        return ecs
    ec = find_ec(ecs, prefix)
    if ec is None:
        raise click.BadParameter(f'no destination class covers {prefix}', param_hint='--ec')
    return [ec]


def _slug(abstract) -> str:
    prefix = str(abstract.ec).replace('/', '_')
    return f'{prefix}_{abstract.dest}_{abstract.protocol.value}'


class Prefix(click.ParamType):
    name = 'prefix'

    def convert(self, value, param, ctx):
        if isinstance(value, IPv4Network):
            return value
        try:
            return IPv4Network(value)
        except ValueError as error:
            self.fail(str(error), param, ctx)


PREFIX = Prefix()


@click.group(cls=CompressGroup)
@click.option('-v', '--verbose', count=True, help='Log more (repeatable).')
@click.option(
    '--format', 'output_format', type=click.Choice(['text', 'json']),
    default='text', help='Report format.')
@click.pass_context
def cli(ctx, verbose, output_format):
    """ Compresses network control planes into smaller equivalent ones. """
    logging.basicConfig(level=max(logging.DEBUG, logging.WARNING - 10 * verbose))
    ctx.obj = {'config': load_config(), 'format': output_format}


def _emit(ctx, text: str, document):
    if ctx.obj['format'] == 'json':
        click.echo(json.dumps(document, indent=2))
    else:
        click.echo(text, nl=False)


@cli.command()
@click.argument('spec_path', metavar='SPEC', type=click.Path(exists=True, dir_okay=False))
@click.option('--ec', 'prefix', type=PREFIX, help='Only compress this class.')
@click.option(
    '--jobs', type=click.IntRange(min=1), envvar='CPCOMPRESS_JOBS',
    help='Worker processes (defaults to MAX_JOBS).')
@click.option(
    '--out', type=click.Path(file_okay=False),
    help='Write each abstract network and its mapping here.')
@click.pass_context
def compress(ctx, spec_path, prefix, jobs, out):
    """ Compresses every destination class of SPEC. """
    config = ctx.obj['config']
    spec = _read_spec(spec_path)
    ecs = _select_ecs(spec, prefix)
    work = [
        (spec, ec, dest, protocol, config['RANK_SAMPLES'])
        for ec, dest, protocol in compression_jobs(spec, ecs)]
    jobs = config['MAX_JOBS'] if jobs is None else jobs
    logger.info('%d jobs on %d workers', len(work), jobs)

    if jobs == 1 or len(work) <= 1:
        abstracts = [run_job(job) for job in work]
    else:
        # map() yields results in submission order:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
            abstracts = list(executor.map(run_job, work))

    if out is not None:
        os.makedirs(out, exist_ok=True)
        for abstract in abstracts:
            network, mapping = emit_network_spec(abstract)
            base = os.path.join(out, _slug(abstract))
            with open(base + '.json', 'w', encoding='utf-8') as f:
                f.write(network)
            with open(base + '.map.json', 'w', encoding='utf-8') as f:
                f.write(mapping)
    _emit(ctx, render.render_compress(abstracts), render.compress_report(abstracts))


def _job_for(spec, abstract, record, protocol):
    """ The (class, destination, protocol) an abstract network covers. """
    origins = [prefix for prefixes in abstract.origins.values() for prefix in prefixes]
    if not origins:
        raise click.BadParameter('the abstract network originates nothing')
    ec = find_ec(compute_ecs(spec), origins[0])
    if ec is None:
        raise click.BadParameter(f'{origins[0]} is not announced by SPEC')
    abstract_dest = sorted(abstract.origins)[0]
    dests = sorted(u for u in ec.dest_nodes if record.f.get(u) == abstract_dest)
    if not dests:
        raise click.BadParameter(f'no origin of {ec} maps to {abstract_dest}')
    factory = specialize_spec(spec, ec)
    if protocol is None:
        dynamic = [p for p in factory.protocols(dests[0]) if p is not Protocol.STATIC]
        if abstract.static_routes or not dynamic:
            protocol = Protocol.STATIC
        else:
            protocol = dynamic[0]
    return factory, dests[0], Protocol(protocol)


def _oracle_report(verdict) -> dict:
    counterexample = verdict.counterexample
    return {
        'ok': verdict.ok,
        'concrete_solutions': verdict.concrete_solutions,
        'abstract_solutions': verdict.abstract_solutions,
        'counterexample': None if counterexample is None else str(counterexample),
        'counterexample_kind': None if counterexample is None else counterexample.kind,
    }


@cli.command()
@click.argument('spec_path', metavar='SPEC', type=click.Path(exists=True, dir_okay=False))
@click.argument('abstract_path', metavar='ABSTRACT', type=click.Path(exists=True, dir_okay=False))
@click.argument('mapping_path', metavar='MAPPING', type=click.Path(exists=True, dir_okay=False))
@click.option(
    '--oracle-bound', type=click.IntRange(min=1), envvar='CPCOMPRESS_ORACLE_BOUND',
    help='Largest network the brute-force oracle runs on.')
@click.option(
    '--protocol', type=click.Choice([p.value for p in Protocol]),
    help='Protocol the abstraction was computed for.')
@click.pass_context
def check(ctx, spec_path, abstract_path, mapping_path, oracle_bound, protocol):
    """ Checks that ABSTRACT, related to SPEC by MAPPING, is equivalent. """
    config = ctx.obj['config']
    bound = config['ORACLE_BOUND'] if oracle_bound is None else oracle_bound
    spec = _read_spec(spec_path)
    abstract = _read_spec(abstract_path)
    with open(mapping_path, encoding='utf-8') as f:
        record = parse_mapping(f.read())
    factory, dest, protocol = _job_for(spec, abstract, record, protocol)
    amap = AbstractionMap.from_record(record, abstract)

    relations = edge_relations(spec, factory.ec, dest, protocol)
    certificate = certify(relations, amap, samples=config['RANK_SAMPLES'])
    report = {
        'ec': str(factory.ec),
        'dest': dest,
        'protocol': protocol.value,
        'mode': amap.mode.value,
        'checked': list(certificate.checked),
        'violations': [str(v) for v in certificate.violations],
        'oracle': None,
        'oracle_skipped': None,
    }
    ok = certificate.ok

    size = max(len(relations.topology.nodes), len(abstract.nodes))
    if size > bound:
        reason = f'{size} nodes exceeds the oracle bound of {bound}'
        warnings.warn(f'Skipping the equivalence oracle: {reason}')
        report['oracle_skipped'] = reason
    else:
        abstract_ec = find_ec(compute_ecs(abstract), factory.ec.representative_prefix)
        abstract_srp = SrpFactory(abstract, abstract_ec).build(amap.dest, protocol)
        verdict = check_cp_equivalence(
            factory.build(dest, protocol), abstract_srp, amap, bound)
        report['oracle'] = _oracle_report(verdict)
        ok = ok and verdict.ok
    report['ok'] = ok

    _emit(ctx, render.render_check([report]), report)
    if not ok:
        ctx.exit(EXIT_VIOLATION)


def _instances(spec, prefix):
    (ec,) = _select_ecs(spec, prefix)
    return ec, specialize_spec(spec, ec).instances()


@cli.command()
@click.argument('spec_path', metavar='SPEC', type=click.Path(exists=True, dir_okay=False))
@click.option('--ec', 'prefix', type=PREFIX, required=True, help='Destination class.')
@click.option('--enumerate', 'exhaustive', is_flag=True, help='List every stable solution.')
@click.option(
    '--tie-break', type=click.Choice(sorted(TIE_BREAKS)), default='lowest',
    help='Neighbor preferred among equally good offers.')
@click.pass_context
def simulate(ctx, spec_path, prefix, exhaustive, tie_break):
    """ Prints the stable solution(s) of SPEC for one class. """
    config = ctx.obj['config']
    spec = _read_spec(spec_path)
    ec, instances = _instances(spec, prefix)
    jobs, diverged = [], False
    for dest, protocol, srp in instances:
        job = {'ec': str(ec), 'dest': dest, 'protocol': protocol.value, 'error': None}
        if exhaustive:
            solutions = sorted(
                enumerate_solutions(srp, config['ENUMERATION_LIMIT']),
                key=lambda s: repr(sorted(s.labels.items())))
        else:
            try:
                solutions = [simulate_solution(
                    srp, TIE_BREAKS[tie_break], config['DIVERGENCE_FACTOR'])]
            except Divergence as error:
                solutions = []
                job['error'] = f'diverged: {error}'
                diverged = True
        job['solutions'] = solutions
        jobs.append(job)

    document = [
        dict(job, solutions=[render.solution_to_json(s) for s in job['solutions']])
        for job in jobs]
    _emit(ctx, render.render_solutions(jobs), document)
    if diverged:
        ctx.exit(EXIT_VIOLATION)


def _query(query, solution, dest, nodes, waypoints):
    source = nodes[0] if nodes else None
    target = nodes[1] if len(nodes) > 1 else dest
    if query == 'loop':
        return props.has_routing_loop(solution)
    if source is None:
        raise click.BadParameter(f'{query} needs a --node', param_hint='--node')
    if query == 'reach':
        return props.reachability(solution, source, target)
    if query == 'pathlen':
        return sorted(props.path_lengths(solution, source, target))
    if query == 'blackhole':
        return props.black_holed(solution, source)
    if query == 'multipath':
        return props.multipath_consistent(solution, source, target)
    return props.waypointed(solution, source, target, waypoints)


@cli.command()
@click.argument('spec_path', metavar='SPEC', type=click.Path(exists=True, dir_okay=False))
@click.option('--ec', 'prefix', type=PREFIX, required=True, help='Destination class.')
@click.option('--query', type=click.Choice(props.QUERIES), required=True)
@click.option(
    '--node', 'nodes', multiple=True,
    help='Source node, then optionally the target (defaults to the destination).')
@click.option('--waypoint', 'waypoints', multiple=True, help='Waypoint nodes.')
@click.pass_context
def properties(ctx, spec_path, prefix, query, nodes, waypoints):
    """ Evaluates a forwarding property on every stable solution. """
    config = ctx.obj['config']
    spec = _read_spec(spec_path)
    ec, instances = _instances(spec, prefix)
    for node in nodes + waypoints:
        if node not in spec.nodes:
            raise click.BadParameter(f'unknown node {node!r}')
    results = []
    for dest, protocol, srp in instances:
        try:
            solutions = enumerate_solutions(srp, config['ENUMERATION_LIMIT'])
        except InstanceTooLarge:
            solutions = [simulate_solution(
                srp, factor=config['DIVERGENCE_FACTOR'])]
        solutions = sorted(solutions, key=lambda s: repr(sorted(s.labels.items())))
        results.append({
            'query': query,
            'arguments': list(nodes) + list(waypoints),
            'ec': str(ec),
            'dest': dest,
            'protocol': protocol.value,
            'verdicts': [_query(query, s, dest, nodes, waypoints) for s in solutions],
        })
    _emit(ctx, render.render_properties(results), results)


@cli.command('gen')
@click.argument('kind', type=click.Choice(KINDS))
@click.argument('size', type=int, required=False)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', type=click.File('w', encoding='utf-8'), default='-')
def gen_command(kind, size, seed, out):
    """ Writes a generated network. """
    out.write(dump_network_spec(generate(kind, size, seed)))


def main():
    cli(prog_name='cpcompress')


if __name__ == '__main__':
    main()
