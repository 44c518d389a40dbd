import sys
from pathlib import Path
from typing import List, Optional

from groupmix.core.config import GroupMixConfig, setting
from groupmix.core.construct import build_counterexample, counterexample_report
from groupmix.core.identify import (CERTIFIED, IDENTICAL, check_equal_laws, certify_pair,
                                    confusability_search, identifiability_threshold)
from groupmix.core.lemmas import run_lemma_tests
from groupmix.core.measures import load_mixture, save_mixture
from groupmix.core.report import RunReport
from groupmix.core.simulate import (bernoulli_reduce, empirical_moment, mixing_moments,
                                    sample_groups, save_dataset)
from groupmix.core.tensor import DENSE, group_law, symmetrize, tensor_distance
from groupmix.util.argparse import EXIT_USAGE, ArgParse
from groupmix.util.logger import logger
from groupmix.util.number_type import CountType, format_scalar

EXIT_OK = 0
EXIT_DIFFERENT = 1
EXIT_INCONCLUSIVE = 2
EXIT_INPUT = EXIT_USAGE
EXIT_INVARIANT = 65

GLOBAL_FLAGS = ('--config', '--quiet')


class InputError(Exception):
    """A command input (file or flag value) could not be used"""


class GroupMixCLI(ArgParse):
    """
    groupmix command line: construct counterexamples, compare and certify
    group laws, search for confusable mixtures, and simulate groups.
    Each command prints one JSON RunReport on stdout.
    """

    def __init__(self, stdout=None):
        super().__init__()
        self.stdout = stdout or sys.stdout
        self.report: Optional[RunReport] = None

    def define_options(self):
        """Define the groupmix command structure"""
        self.add_global_args([
            {'name': 'config', 'msg': 'Extra YAML config file merged over the defaults', 'type': str,
             'default': None},
            {'name': 'quiet', 'msg': 'Only log warnings and errors', 'type': bool, 'default': False},
        ])

        self.add_cmd('construct', msg="Build a certified pair of m-component mixtures with equal "
                                      "order-(2m-2) group laws")
        self.add_args([
            {'name': 'm', 'msg': 'Number of components', 'type': int, 'required': True},
            {'name': 'd', 'msg': 'Number of atoms', 'type': int, 'default': 2},
            {'name': 'seed', 'msg': 'Draw the nodes at random with this seed', 'type': int, 'default': None},
            {'name': 'random_base', 'msg': 'Use random full-support base measures', 'type': bool,
             'default': False},
            {'name': 'out', 'msg': 'Write the mixtures to OUT_P.json and OUT_Q.json', 'type': str,
             'default': None},
        ])

        self.add_cmd('check', msg="Compare the order-n group laws of two mixtures")
        self.add_args([
            {'name': 'left', 'msg': 'Mixture JSON file', 'type': str, 'required': True},
            {'name': 'right', 'msg': 'Mixture JSON file', 'type': str, 'required': True},
            {'name': 'n', 'msg': 'Group size', 'type': int, 'required': True},
            {'name': 'tol', 'msg': 'Max-abs tolerance (default: 0 exact, tolerance.law float)',
             'type': float, 'default': None},
        ])

        self.add_cmd('certify', msg="Certify that two mixtures have different order-n group laws")
        self.add_args([
            {'name': 'left', 'msg': 'Mixture JSON file', 'type': str, 'required': True},
            {'name': 'right', 'msg': 'Mixture JSON file', 'type': str, 'required': True},
            {'name': 'n', 'msg': 'Group size', 'type': int, 'required': True},
        ])

        self.add_cmd('search', msg="Search for a different mixture with the same order-n group law")
        self.add_args([
            {'name': 'target', 'msg': 'Mixture JSON file', 'type': str, 'required': True},
            {'name': 'n', 'msg': 'Group size', 'type': int, 'required': True},
            {'name': 'restarts', 'msg': 'Number of random starts', 'type': int, 'default': None},
            {'name': 'delta', 'msg': 'Exclusion radius around the target', 'type': float, 'default': None},
            {'name': 'seed', 'msg': 'Base seed', 'type': int, 'default': 0},
            {'name': 'workers', 'msg': 'Threads running restarts', 'type': int, 'default': None},
        ])

        self.add_cmd('simulate', msg="Sample groups from a mixture and compare their empirical law")
        self.add_args([
            {'name': 'mixture', 'msg': 'Mixture JSON file', 'type': str, 'required': True},
            {'name': 'n', 'msg': 'Group size', 'type': int, 'required': True},
            {'name': 'groups', 'msg': 'Number of groups (e.g. 1e5, 100k)', 'type': CountType,
             'required': True},
            {'name': 'seed', 'msg': 'RNG seed', 'type': int, 'default': 0},
            {'name': 'out', 'msg': 'Dataset file (.csv or .jsonl)', 'type': str, 'default': None},
        ])

        self.add_cmd('reduce-binomial', msg="Binomial mixture pmf of the group sum (d = 2)")
        self.add_args([
            {'name': 'mixture', 'msg': 'Mixture JSON file', 'type': str, 'required': True},
            {'name': 'n', 'msg': 'Group size', 'type': int, 'required': True},
        ])

        self.add_cmd('lemma-tests', msg="Run the randomized rank, marginalization and binomial checks")
        self.add_args([
            {'name': 'trials', 'msg': 'Trials per randomized check', 'type': int, 'default': 200},
            {'name': 'seed', 'msg': 'Base seed', 'type': int, 'default': 0},
        ])

    def _handle_command(self, cmd_name: str):
        inputs = {k: (str(v) if isinstance(v, CountType) else v) for k, v in self.kwargs.items()
                  if k not in ('config', 'quiet')}
        self.report = RunReport(cmd_name, inputs, self.kwargs.get('seed'))
        try:
            self._configure()
            return super()._handle_command(cmd_name)
        except InputError as e:
            logger.error(str(e))
            self._fail(e, EXIT_INPUT)
        except (ValueError, ArithmeticError) as e:
            logger.error(f"Invariant violation: {e}")
            self._fail(e, EXIT_INVARIANT)
        finally:
            print(self.report.dumps(), file=self.stdout)
        return self.kwargs

    def _fail(self, error: Exception, code: int):
        self.report.outputs['error'] = str(error)
        self.exit_code = code

    def _configure(self):
        config_file = self.kwargs.get('config')
        try:
            config = GroupMixConfig.get_instance(config_file)
            logger.set_level('warning' if self.kwargs.get('quiet') else config.get('log.level', 'info'))
        except (FileNotFoundError, ValueError) as e:
            raise InputError(str(e)) from e
        logger.enable_colors = bool(config.get('log.color', True))
        self.report.config = {'sources': list(config.sources), 'settings': config.settings, 'resolved': {}}

    def _resolve(self, flag: str, key: str, cast):
        """Flag value, else the config setting; recorded in the report"""
        value = self.kwargs.get(flag)
        value = cast(value if value is not None else setting(key))
        self.report.config['resolved'][key] = value
        return value

    @staticmethod
    def _load(path: str):
        try:
            return load_mixture(path)
        except (FileNotFoundError, ValueError) as e:
            raise InputError(f"Cannot read mixture '{path}': {e}") from e

    def _check_positive(self, name: str, minimum: int = 1):
        value = self.kwargs.get(name)
        if value is not None and int(value) < minimum:
            raise InputError(f"--{name.replace('_', '-')} must be >= {minimum}, got {value}")

    # --- commands ---------------------------------------------------------

    def construct(self):
        """Build and certify a tight counterexample"""
        self._check_positive('m')
        self._check_positive('d', 2)
        timings = self.report.timings
        with logger.phase('construct', timings):
            pair = build_counterexample(self.kwargs['m'], self.kwargs['d'], self.kwargs['seed'],
                                        self.kwargs['random_base'])
        self.report.outputs = counterexample_report(pair)
        out = self.kwargs.get('out')
        if out:
            stem = Path(out)
            p_path = stem.with_name(f"{stem.stem}_P.json")
            q_path = stem.with_name(f"{stem.stem}_Q.json")
            save_mixture(pair.P, p_path)
            save_mixture(pair.Q, q_path)
            self.report.outputs['files'] = [str(p_path), str(q_path)]
        logger.success(f"m={pair.m}: laws equal at n={pair.equal_order}, "
                       f"gap {format_scalar(pair.gap)} at n={pair.gap_order}")
        return EXIT_OK

    def check(self):
        """Compare group laws"""
        self._check_positive('n', 0)
        P, Q = self._load(self.kwargs['left']), self._load(self.kwargs['right'])
        tol = self.kwargs['tol']
        if not (P.exact and Q.exact):
            tol = self._resolve('tol', 'tolerance.law', float)
        with logger.phase('check', self.report.timings):
            verdict = check_equal_laws(P, Q, self.kwargs['n'], tol)
        self.report.outputs = verdict.to_json()
        logger.info(f"n={verdict.n}: {verdict.verdict} (max-abs {format_scalar(verdict.max_abs)})")
        return EXIT_OK if verdict.equal else EXIT_DIFFERENT

    def certify(self):
        """Rank certificate on the reduced pair"""
        self._check_positive('n')
        P, Q = self._load(self.kwargs['left']), self._load(self.kwargs['right'])
        with logger.phase('certify', self.report.timings):
            outcome = certify_pair(P, Q, self.kwargs['n'])
        self.report.outputs = outcome
        logger.info(f"n={self.kwargs['n']}: {outcome['status']}")
        if outcome['status'] == CERTIFIED:
            return EXIT_OK
        if outcome['status'] == IDENTICAL:
            return EXIT_DIFFERENT
        return EXIT_INCONCLUSIVE

    def search(self):
        """Confusability search"""
        self._check_positive('n')
        self._check_positive('restarts')
        self._check_positive('workers')
        if self.kwargs['delta'] is not None and self.kwargs['delta'] <= 0:
            raise InputError(f"--delta must be > 0, got {self.kwargs['delta']}")
        P = self._load(self.kwargs['target'])
        n = self.kwargs['n']
        params = {
            'restarts': self._resolve('restarts', 'search.restarts', int),
            'delta': self._resolve('delta', 'search.delta', float),
            'workers': self._resolve('workers', 'search.workers', int),
            'iterations': self._resolve('iterations', 'search.iterations', int),
            'penalty': self._resolve('penalty', 'search.penalty', float),
            'threshold': self._resolve('threshold', 'search.threshold', float),
        }
        with logger.phase('search', self.report.timings):
            result = confusability_search(P, n, seed=self.kwargs['seed'], **params)
        self.report.outputs = result.to_json()
        self.report.outputs['identifiability_threshold'] = identifiability_threshold(P.order)
        if result.confusable:
            logger.warning(f"Confusable alternative at separation {result.separation:.4f}, "
                           f"objective {result.objective:.3e}")
            return EXIT_DIFFERENT
        logger.info(f"No confusable alternative found (best objective {result.objective:.3e})")
        return EXIT_OK if n >= identifiability_threshold(P.order) else EXIT_INCONCLUSIVE

    def simulate(self):
        """Sample groups and report the empirical law's distance to the true law"""
        self._check_positive('n')
        self._check_positive('groups')
        P = self._load(self.kwargs['mixture'])
        n, N, seed = self.kwargs['n'], int(self.kwargs['groups']), self.kwargs['seed']
        timings = self.report.timings
        block_size = self._resolve('block_size', 'simulate.block_size', int)
        with logger.phase('sample', timings):
            data = sample_groups(P, n, N, seed, block_size)
        with logger.phase('moment', timings):
            empirical = empirical_moment(data)
            truth = group_law(P.to_float(), n, DENSE)
            raw = tensor_distance(empirical, truth)
            sym = tensor_distance(symmetrize(empirical), truth)
        self.report.outputs = {
            'groups': len(data),
            'n': n,
            'd': data.d,
            'max_abs': float(raw[0]),
            'l2': raw[1],
            'symmetrized_max_abs': float(sym[0]),
            'symmetrized_l2': sym[1],
        }
        out = self.kwargs.get('out')
        if out:
            try:
                save_dataset(data, out)
            except ValueError as e:
                raise InputError(str(e)) from e
            self.report.outputs['file'] = out
        logger.info(f"{len(data)} groups of size {n}: max-abs distance {float(raw[0]):.4g} to the true law")
        return EXIT_OK

    def reduce_binomial(self):
        """Group-sum pmf and mixing moments"""
        self._check_positive('n', 0)
        P = self._load(self.kwargs['mixture'])
        if P.d != 2:
            raise InputError(f"reduce-binomial needs a mixture over d = 2 atoms, got d={P.d}")
        n = self.kwargs['n']
        self.report.outputs = {
            'n': n,
            'pmf': [format_scalar(x) for x in bernoulli_reduce(P, n)],
            'mixing_moments': [format_scalar(x) for x in mixing_moments(P, n)],
        }
        return EXIT_OK

    def lemma_tests(self):
        """Randomized property suite"""
        self._check_positive('trials')
        with logger.phase('lemma-tests', self.report.timings):
            results = run_lemma_tests(self.kwargs['trials'], self.kwargs['seed'])
        self.report.outputs = results
        passed = all(r['passed'] for r in results.values())
        if passed:
            logger.success(f"All {len(results)} properties hold")
        return EXIT_OK if passed else EXIT_DIFFERENT


def _hoist_global_flags(argv: List[str]) -> List[str]:
    """Move --config/--quiet given before the command to after it"""
    leading = []
    i = 0
    while i < len(argv) and argv[i].split('=', 1)[0] in GLOBAL_FLAGS:
        flag = argv[i]
        leading.append(flag)
        if flag == '--config' and i + 1 < len(argv):
            leading.append(argv[i + 1])
            i += 1
        i += 1
    if not leading or i >= len(argv):
        return argv
    return [argv[i]] + leading + argv[i + 1:]


def run(argv: List[str], stdout=None) -> int:
    """
    Run one command. Every run that reaches a command, and every usage
    error, prints a JSON report.

    :param argv: Arguments without the program name
    :param stdout: Stream receiving the JSON report (default: sys.stdout)
    :return: Exit code
    """
    cli = GroupMixCLI(stdout=stdout)
    cli.define_options()
    try:
        cli.parse(_hoist_global_flags(list(argv)))
    except SystemExit as e:
        code = e.code if isinstance(e.code, int) else EXIT_USAGE
        if code != EXIT_OK and cli.report is None:
            report = RunReport(cli.current_command or 'usage', {'argv': list(argv)})
            report.outputs['error'] = cli.usage_error or 'usage error'
            print(report.dumps(), file=cli.stdout)
        return code
    return cli.exit_code


def main():
    """Main entry point for the groupmix CLI"""
    try:
        code = run(sys.argv[1:])
    except KeyboardInterrupt:
        logger.error("\nOperation cancelled by user")
        code = 130
    sys.exit(code)


if __name__ == '__main__':
    main()
