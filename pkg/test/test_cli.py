""" Tests cpcompress.cli """

import json
import os
import unittest
from click.testing import CliRunner
from cpcompress import topologies
from cpcompress.cli import cli
from cpcompress.compress import AbstractionMap, Mode, project_network
from cpcompress.config import load_config
from cpcompress.network import dump_mapping, dump_network_spec, parse_network_spec
from sample_networks import relations_for

EC = '10.0.0.0/24'
SLUG = '10.0.0.0_24_d_bgp'


def _write(path, spec):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dump_network_spec(spec))


class CliTestCase(unittest.TestCase):
    """ Runs every test in its own temporary directory. """

    def setUp(self):
        self.runner = CliRunner()
        self._isolation = self.runner.isolated_filesystem()
        self._isolation.__enter__()

    def tearDown(self):
        self._isolation.__exit__(None, None, None)

    def invoke(self, *args):
        return self.runner.invoke(cli, list(args))


class TestGen(CliTestCase):
    """ Tests `cpcompress gen`. """

    def test_mesh(self):
        result = self.invoke('gen', 'mesh', '50')
        self.assertEqual(result.exit_code, 0)
        spec = parse_network_spec(result.stdout)
        self.assertEqual((len(spec.nodes), len(spec.links)), (50, 1225))

    def test_out_file(self):
        result = self.invoke('gen', 'gadget', '--out', 'gadget.json')
        self.assertEqual(result.exit_code, 0)
        with open('gadget.json', encoding='utf-8') as f:
            self.assertEqual(
                parse_network_spec(f.read()), topologies.local_pref_gadget())

    def test_unsupported_size(self):
        result = self.invoke('gen', 'fattree', '181')
        self.assertEqual(result.exit_code, 2)
        self.assertEqual(json.loads(result.stderr)['error'], 'UnsupportedSize')


class TestCompress(CliTestCase):
    """ Tests `cpcompress compress`. """

    def test_ring_report(self):
        _write('ring.json', topologies.ring(100))
        result = self.invoke('compress', 'ring.json', '--ec', EC)
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn(
            '10.0.0.0/24 -> r0000 (bgp): 100 nodes / 100 edges => 51 nodes / 50 edges',
            result.stdout)

    def test_json_report(self):
        _write('gadget.json', topologies.local_pref_gadget())
        result = self.invoke('--format', 'json', 'compress', 'gadget.json')
        self.assertEqual(result.exit_code, 0, result.output)
        (row,) = json.loads(result.stdout)['rows']
        self.assertEqual((row['abstract_nodes'], row['abstract_edges']), (4, 4))

    def test_jobs_agree(self):
        """ One worker and two workers write identical files. """
        _write('ring.json', topologies.ring(10))
        for jobs in ('1', '2'):
            result = self.invoke('compress', 'ring.json', '--jobs', jobs, '--out', f'out{jobs}')
            self.assertEqual(result.exit_code, 0, result.output)
        names = sorted(os.listdir('out1'))
        self.assertEqual(names, sorted(os.listdir('out2')))
        self.assertEqual(len(names), 20)
        for name in names:
            with open(os.path.join('out1', name), 'rb') as a, \
                    open(os.path.join('out2', name), 'rb') as b:
                self.assertEqual(a.read(), b.read(), name)

    def test_parse_error(self):
        with open('broken.json', 'w', encoding='utf-8') as f:
            f.write('{"version": "bonsai-net/1",\n')
        result = self.invoke('compress', 'broken.json')
        self.assertEqual(result.exit_code, 2)
        record = json.loads(result.stderr.strip().splitlines()[-1])
        self.assertEqual(record['error'], 'ParseError')

    def test_unknown_class(self):
        _write('ring.json', topologies.ring(4))
        result = self.invoke('compress', 'ring.json', '--ec', '192.168.0.0/24')
        self.assertEqual(result.exit_code, 2)

    def test_missing_argument(self):
        self.assertEqual(self.invoke('compress').exit_code, 2)


class TestCheck(CliTestCase):
    """ Tests `cpcompress check`. """

    def setUp(self):
        super().setUp()
        _write('gadget.json', topologies.local_pref_gadget())

    def test_compressed_passes(self):
        result = self.invoke('compress', 'gadget.json', '--out', 'out')
        self.assertEqual(result.exit_code, 0, result.output)
        base = os.path.join('out', SLUG)
        result = self.invoke(
            '--format', 'json', 'check', 'gadget.json', base + '.json', base + '.map.json')
        self.assertEqual(result.exit_code, 0, result.output)
        report = json.loads(result.stdout)
        self.assertTrue(report['ok'])
        self.assertEqual(report['mode'], Mode.FORALL_FORALL.value)
        self.assertEqual(report['oracle']['concrete_solutions'], 3)

    def test_naive_fails(self):
        """ The gadget with its middle routers merged and not split is
        rejected by both the certificate and the oracle. """
        relations = relations_for(topologies.local_pref_gadget())
        naive = AbstractionMap.from_blocks(
            relations.topology, [{'d'}, {'a'}, {'b1', 'b2', 'b3'}], relations.h)
        _write('naive.json', project_network(relations, naive))
        with open('naive.map.json', 'w', encoding='utf-8') as f:
            f.write(dump_mapping(naive.record()))
        result = self.invoke('check', 'gadget.json', 'naive.json', 'naive.map.json')
        self.assertEqual(result.exit_code, 1)
        self.assertIn('bgp-effective', result.stdout)
        self.assertIn('oracle: FAILED', result.stdout)

    def test_oracle_skipped(self):
        result = self.invoke('compress', 'gadget.json', '--out', 'out')
        base = os.path.join('out', SLUG)
        result = self.invoke(
            '--format', 'json', 'check', 'gadget.json', base + '.json', base + '.map.json',
            '--oracle-bound', '3')
        self.assertEqual(result.exit_code, 0, result.output)
        report = json.loads(result.stdout)
        self.assertIsNone(report['oracle'])
        self.assertIn('exceeds the oracle bound of 3', report['oracle_skipped'])


class TestSimulate(CliTestCase):
    """ Tests `cpcompress simulate` and `cpcompress properties`. """

    def test_one_solution(self):
        _write('gadget.json', topologies.local_pref_gadget())
        result = self.invoke('simulate', 'gadget.json', '--ec', EC)
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn('1 solution\n', result.stdout)
        self.assertIn('b1: lp=100 path=[d] -> d', result.stdout)

    def test_enumerate(self):
        _write('gadget.json', topologies.local_pref_gadget())
        result = self.invoke('--format', 'json', 'simulate', 'gadget.json', '--ec', EC, '--enumerate')
        self.assertEqual(result.exit_code, 0, result.output)
        (job,) = json.loads(result.stdout)
        self.assertEqual(len(job['solutions']), 3)

    def test_divergence(self):
        _write('bad.json', topologies.bad_gadget())
        result = self.invoke('simulate', 'bad.json', '--ec', EC)
        self.assertEqual(result.exit_code, 1)
        self.assertIn('diverged', result.stdout)
        self.assertIn('divergence factor 2', result.stdout)

    def test_properties(self):
        _write('diamond.json', topologies.rip_diamond())
        result = self.invoke(
            'properties', 'diamond.json', '--ec', EC, '--query', 'pathlen', '--node', 'a')
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn('pathlen(a) in 10.0.0.0/24 -> d: [2]', result.stdout)

    def test_unknown_node(self):
        _write('diamond.json', topologies.rip_diamond())
        result = self.invoke(
            'properties', 'diamond.json', '--ec', EC, '--query', 'reach', '--node', 'zz')
        self.assertEqual(result.exit_code, 2)


class TestConfig(unittest.TestCase):
    """ Tests the settings layer. """

    def test_defaults(self):
        config = load_config()
        self.assertEqual(config['ORACLE_BOUND'], 10)
        self.assertEqual(config['MAX_JOBS'], 4)

    def test_override(self):
        config = load_config({'ORACLE_BOUND': 6})
        self.assertEqual(config['ORACLE_BOUND'], 6)
        self.assertEqual(config['RANK_SAMPLES'], 64)


if __name__ == '__main__':
    unittest.main()
