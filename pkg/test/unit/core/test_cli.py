"""
Tests for cli.py - groupmix commands, JSON reports and exit codes
"""
import unittest
import sys
import os
import io
import json
import tempfile
from contextlib import redirect_stderr
from fractions import Fraction as F
from pathlib import Path
from unittest import mock

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', '..'))

from groupmix.core.cli import (EXIT_DIFFERENT, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_OK, _hoist_global_flags,
                               run)
from groupmix.core.config import GroupMixConfig
from groupmix.core.measures import DiscreteMeasure, Mixture, save_mixture
from groupmix.core.report import RunReport


class CLITestBase(unittest.TestCase):
    """Runs commands in a scratch directory with only the packaged defaults"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.user_patch = mock.patch('groupmix.core.config.USER_CONFIG_FILE',
                                     Path(self.tmp.name) / 'absent.yaml')
        self.env_patch = mock.patch.dict(os.environ, {}, clear=False)
        self.user_patch.start()
        self.env_patch.start()
        os.environ.pop('GROUPMIX_CONFIG', None)
        GroupMixConfig.reset()

    def tearDown(self):
        GroupMixConfig.reset()
        self.env_patch.stop()
        self.user_patch.stop()
        self.tmp.cleanup()

    def path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def invoke(self, *argv):
        """Run argv; return (exit code, parsed report or None)"""
        out = io.StringIO()
        with redirect_stderr(io.StringIO()):
            code = run(list(argv), stdout=out)
        text = out.getvalue().strip()
        return code, (json.loads(text) if text else None)

    def pair_files(self):
        code, _ = self.invoke('construct', '--m', '2', '--out', self.path('pair'))
        self.assertEqual(code, EXIT_OK)
        return self.path('pair_P.json'), self.path('pair_Q.json')

    def mixture_file(self, name: str, weights, components) -> str:
        save_mixture(Mixture(weights, [DiscreteMeasure(c) for c in components]), self.path(name))
        return self.path(name)


class TestConstructCommand(CLITestBase):
    """Tests for groupmix construct"""

    def test_reference_pair(self):
        code, report = self.invoke('construct', '--m', '2')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['command'], 'construct')
        self.assertEqual(report['outputs']['alpha'], ['-1', '3', '-3', '1'])
        self.assertEqual(report['outputs']['residual_equal'], '0')
        self.assertEqual(report['outputs']['gap'], '1/18')
        self.assertIn('construct', report['timings'])

    def test_out_files(self):
        p_file, q_file = self.pair_files()
        self.assertTrue(os.path.exists(p_file))
        self.assertTrue(os.path.exists(q_file))

    def test_seeded_random_base(self):
        code, report = self.invoke('construct', '--m', '3', '--d', '3', '--seed', '4', '+random_base')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['seed'], 4)
        self.assertEqual(report['outputs']['P']['d'], 3)

    def test_bad_m(self):
        """Test a rejected value still prints a report with the error"""
        code, report = self.invoke('construct', '--m', '0')
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn('error', report['outputs'])

    def test_usage_errors(self):
        """Test parse failures exit 64 and still print a report"""
        for argv in (['construct', '--m', 'two'], ['construct'], ['construct', '--m', '2', '--bogus', '1']):
            code, report = self.invoke(*argv)
            self.assertEqual(code, EXIT_INPUT)
            self.assertEqual(report['command'], 'construct')
            self.assertEqual(report['inputs']['argv'], argv)
            self.assertTrue(report['outputs']['error'])
        code, report = self.invoke('no-such-command')
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn('no-such-command', report['outputs']['error'])


class TestCheckAndCertifyCommands(CLITestBase):
    """Tests for groupmix check and certify"""

    def test_check(self):
        p_file, q_file = self.pair_files()
        code, report = self.invoke('check', '--left', p_file, '--right', q_file, '--n', '2')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['outputs']['verdict'], 'equal')
        code, report = self.invoke('check', '--left', p_file, '--right', q_file, '--n', '3')
        self.assertEqual(code, EXIT_DIFFERENT)
        self.assertEqual(report['outputs']['max_abs'], '1/18')

    def test_check_missing_file(self):
        p_file, _ = self.pair_files()
        code, report = self.invoke('check', '--left', p_file, '--right', self.path('none.json'), '--n', '2')
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn('none.json', report['outputs']['error'])

    def test_check_malformed_file(self):
        p_file, _ = self.pair_files()
        with open(self.path('bad.json'), 'w') as f:
            f.write('{"d": 2, "weights": ["1/2"], "components": [["1", "0"]]}')
        self.assertEqual(self.invoke('check', '--left', p_file, '--right', self.path('bad.json'),
                                     '--n', '2')[0], EXIT_INPUT)

    def test_certify(self):
        p_file, q_file = self.pair_files()
        code, report = self.invoke('certify', '--left', p_file, '--right', q_file, '--n', '3')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['outputs']['status'], 'certified_distinct')
        code, report = self.invoke('certify', '--left', p_file, '--right', q_file, '--n', '2')
        self.assertEqual(code, EXIT_INCONCLUSIVE)
        code, report = self.invoke('certify', '--left', p_file, '--right', p_file, '--n', '3')
        self.assertEqual(code, EXIT_DIFFERENT)
        self.assertEqual(report['outputs']['status'], 'identical')


class TestSearchCommand(CLITestBase):
    """Tests for groupmix search"""

    def test_point_mass(self):
        """Test n = 1 is at the threshold for m = 1, so no find means identifiable"""
        target = self.mixture_file('dirac.json', [F(1)], [[F(1), F(0)]])
        code, report = self.invoke('search', '--target', target, '--n', '1', '--restarts', '2')
        self.assertEqual(code, EXIT_OK)
        self.assertFalse(report['outputs']['confusable'])
        self.assertEqual(report['outputs']['identifiability_threshold'], 1)
        self.assertEqual(report['outputs']['restarts_used'], 2)

    def test_config_file(self):
        """Test --config supplies search defaults"""
        config = self.path('cfg.yaml')
        with open(config, 'w') as f:
            f.write('search:\n  restarts: 3\n  iterations: 20\n')
        target = self.mixture_file('dirac.json', [F(1)], [[F(1), F(0)]])
        code, report = self.invoke('--config', config, 'search', '--target', target, '--n', '1')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['outputs']['restarts_used'], 3)
        self.assertIn(config, report['config']['sources'])
        resolved = report['config']['resolved']
        self.assertEqual(resolved['search.restarts'], 3)
        self.assertEqual(resolved['search.iterations'], 20)
        self.assertEqual(resolved['search.delta'], 0.05)
        self.assertEqual(resolved['search.penalty'], 1000.0)
        self.assertEqual(report['config']['settings']['search']['restarts'], 3)

    def test_flags_beat_config(self):
        """Test explicit flags are what the report records"""
        os.environ['GROUPMIX_CONFIG'] = self.path('env.yaml')
        with open(self.path('env.yaml'), 'w') as f:
            f.write('search:\n  restarts: 5\n  iterations: 10\n')
        target = self.mixture_file('dirac.json', [F(1)], [[F(1), F(0)]])
        code, report = self.invoke('search', '--target', target, '--n', '1', '--restarts', '2')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['config']['resolved']['search.restarts'], 2)
        self.assertEqual(report['config']['resolved']['search.iterations'], 10)
        self.assertIn(self.path('env.yaml'), report['config']['sources'])

    def test_missing_config(self):
        """Test a missing or broken config file is reported"""
        code, report = self.invoke('construct', '--m', '1', '--config', self.path('none.yaml'))
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn('none.yaml', report['outputs']['error'])
        with open(self.path('bad.yaml'), 'w') as f:
            f.write('search: [1, 2\n')
        GroupMixConfig.reset()
        code, report = self.invoke('construct', '--m', '1', '--config', self.path('bad.yaml'))
        self.assertEqual(code, EXIT_INPUT)
        self.assertEqual(report['command'], 'construct')
        self.assertIn('error', report['outputs'])

    def test_bad_delta(self):
        target = self.mixture_file('dirac.json', [F(1)], [[F(1), F(0)]])
        code, _ = self.invoke('search', '--target', target, '--n', '1', '--delta', '0')
        self.assertEqual(code, EXIT_INPUT)


class TestSimulateAndReduceCommands(CLITestBase):
    """Tests for groupmix simulate and reduce-binomial"""

    def test_simulate(self):
        p_file, _ = self.pair_files()
        out = self.path('groups.csv')
        code, report = self.invoke('simulate', '--mixture', p_file, '--n', '2', '--groups', '2k',
                                   '--seed', '1', '--out', out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report['outputs']['groups'], 2000)
        self.assertLess(report['outputs']['max_abs'], 0.1)
        self.assertTrue(os.path.exists(out))
        self.assertEqual(report['inputs']['groups'], '2000')
        self.assertEqual(report['config']['resolved']['simulate.block_size'], 1024)

    def test_simulate_bad_output(self):
        p_file, _ = self.pair_files()
        code, _ = self.invoke('simulate', '--mixture', p_file, '--n', '2', '--groups', '10',
                              '--out', self.path('groups.txt'))
        self.assertEqual(code, EXIT_INPUT)

    def test_reduce_binomial(self):
        p_file, q_file = self.pair_files()
        for path in (p_file, q_file):
            code, report = self.invoke('reduce-binomial', '--mixture', path, '--n', '2')
            self.assertEqual(code, EXIT_OK)
            self.assertEqual(report['outputs']['pmf'], ['1/3', '1/3', '1/3'])
            self.assertEqual(report['outputs']['mixing_moments'], ['1', '1/2', '1/3'])

    def test_reduce_binomial_needs_two_atoms(self):
        three = self.mixture_file('three.json', [F(1)], [[F(1), F(0), F(0)]])
        self.assertEqual(self.invoke('reduce-binomial', '--mixture', three, '--n', '2')[0], EXIT_INPUT)


class TestLemmaTestsCommand(CLITestBase):
    """Tests for groupmix lemma-tests"""

    def test_small_run(self):
        code, report = self.invoke('--quiet', 'lemma-tests', '--trials', '3')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(set(report['outputs']),
                         {'noncollinear_rank', 'segment_rank', 'marginalization', 'binomial_bridge'})
        self.assertTrue(all(r['passed'] for r in report['outputs'].values()))

    @unittest.skipUnless(os.environ.get('GROUPMIX_SLOW') == '1', "set GROUPMIX_SLOW=1")
    def test_full_run(self):
        """Test the default 200 trials all pass"""
        code, report = self.invoke('--quiet', 'lemma-tests', '--trials', '200', '--seed', '1')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(all(r['passed'] for r in report['outputs'].values()))


class TestHelpers(unittest.TestCase):
    """Tests for flag hoisting and the report format"""

    def test_hoist(self):
        self.assertEqual(_hoist_global_flags(['--quiet', 'construct', '--m', '2']),
                         ['construct', '--quiet', '--m', '2'])
        self.assertEqual(_hoist_global_flags(['--config', 'c.yaml', 'check', '--n', '2']),
                         ['check', '--config', 'c.yaml', '--n', '2'])
        self.assertEqual(_hoist_global_flags(['construct', '--quiet']), ['construct', '--quiet'])

    def test_report_round_trip(self):
        report = RunReport('check', {'n': 2}, seed=None)
        report.outputs['max_abs'] = F(1, 18)
        back = RunReport.loads(report.dumps())
        self.assertEqual(back.command, 'check')
        self.assertEqual(back.outputs['max_abs'], '1/18')


if __name__ == '__main__':
    unittest.main()
