import json
import tempfile
from io import StringIO
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from experiments.services import (
    EXIT_CERTIFICATION_FAILURE,
    EXIT_CONFIGURATION_ERROR,
    EXIT_OK,
    ExperimentService,
)

CONFIGS = Path(settings.BASE_DIR) / 'configs'


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.output_dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, name, config, *args, **options):
        out = StringIO()
        call_command(name, *args, str(CONFIGS / config), output_dir=str(self.output_dir), stdout=out, **options)
        return out.getvalue()


class ValidateCommandTests(CommandTestCase):
    def test_unit_speed_passes(self):
        output = self.call('validate', 'unit_speed_1d.json')

        self.assertIn('[PASS] H4: mu=1', output)
        text = (self.output_dir / 'validate.txt').read_text()
        self.assertTrue(text.startswith('# seed=0'))
        self.assertIn('C=', text)

    def test_clamped_decay_passes(self):
        output = self.call('validate', 'scalar_decay.json', seed=3)
        self.assertIn('mu=2', output)

    def test_delay_too_large_is_a_configuration_error(self):
        with self.assertRaises(CommandError) as raised:
            self.call('validate', 'delay_too_large.json')

        self.assertEqual(raised.exception.returncode, EXIT_CONFIGURATION_ERROR)
        self.assertIn('problem.tau', str(raised.exception))

    def test_one_sided_controls_fail_the_petrov_check(self):
        with self.assertRaises(CommandError) as raised:
            self.call('validate', 'one_sided.json')

        self.assertEqual(raised.exception.returncode, EXIT_CERTIFICATION_FAILURE)
        self.assertIn('[FAIL] H4', (self.output_dir / 'validate.txt').read_text())


class SimulateCommandTests(CommandTestCase):
    def test_writes_the_trajectory(self):
        output = self.call('simulate', 'unit_speed_1d.json', history='far', control='0')

        self.assertIn('hitting time 1', output)
        lines = (self.output_dir / 'trajectory_far.csv').read_text().splitlines()
        self.assertEqual(lines[0], 't,y_1,d_K,control_index')

    def test_unknown_history(self):
        with self.assertRaises(CommandError) as raised:
            self.call('simulate', 'unit_speed_1d.json', history='nowhere')
        self.assertEqual(raised.exception.returncode, EXIT_CONFIGURATION_ERROR)

    def test_control_out_of_range(self):
        with self.assertRaises(CommandError) as raised:
            self.call('simulate', 'unit_speed_1d.json', history='far', control='5')
        self.assertEqual(raised.exception.returncode, EXIT_CONFIGURATION_ERROR)


class SteerAndMinTimeCommandTests(CommandTestCase):
    def test_steer_near_history(self):
        output = self.call('steer', 'unit_speed_1d.json', history='near')

        self.assertTrue(output.startswith('PASS steering'))
        self.assertTrue((self.output_dir / 'steering_near.csv').exists())

    def test_steer_outside_the_radius(self):
        with self.assertRaises(CommandError) as raised:
            self.call('steer', 'unit_speed_1d.json', history='far')
        self.assertEqual(raised.exception.returncode, EXIT_CONFIGURATION_ERROR)

    def test_mintime(self):
        output = self.call('mintime', 'unit_speed_1d.json', history='far')

        self.assertIn('T(far) = 1 by analytic', output)
        lines = (self.output_dir / 'mintime_far.csv').read_text().splitlines()
        self.assertEqual(lines[1], 'far,1,analytic,0,0')


class CertifyCommandTests(CommandTestCase):
    def test_dpp(self):
        output = self.call('certify', 'unit_speed_1d.json', 'dpp', seed=5)

        self.assertIn('verdict: pass', output)
        lines = (self.output_dir / 'certify_dpp.csv').read_text().splitlines()
        self.assertTrue(lines[0].startswith('# check=dpp seed=5'))
        self.assertEqual(len(lines), 2 + 6)

    def test_distance_bound(self):
        output = self.call('certify', 'unit_speed_1d.json', 'distance-bound')
        self.assertIn('verdict: pass', output)

    def test_boundary_lemma(self):
        output = self.call('certify', 'unit_speed_1d.json', 'boundary-lemma')

        self.assertIn('verdict: pass', output)
        self.assertIn('constant rho:', output)

    def test_semiconcavity_of_the_planar_ball(self):
        # T = d_K near (2, 0), whose tangential curvature there is 1/2
        output = self.call('certify', 'unit_speed_2d.json', 'semiconcavity')

        self.assertIn('verdict: pass', output)
        modulus = float(output.split('measured modulus: ')[1].split()[0])
        self.assertAlmostEqual(modulus, 0.5, delta=0.05)

    def test_clamped_decay_certificates(self):
        for check in ('dpp', 'distance-bound', 'lipschitz'):
            with self.subTest(check=check):
                output = self.call('certify', 'scalar_decay.json', check)

                self.assertIn('verdict: pass', output)
                self.assertIn('skipped 0', output)

    def test_unknown_check_is_rejected_by_the_parser(self):
        with self.assertRaises(CommandError):
            self.call('certify', 'unit_speed_1d.json', 'convexity')


class RunTests(SimpleTestCase):
    def test_report_summarizes_every_step(self):
        with tempfile.TemporaryDirectory() as tmp:
            status, message, payload = ExperimentService.run('report', CONFIGS / 'unit_speed_1d.json', tmp)
            lines = (Path(tmp) / 'summary.csv').read_text().splitlines()

        self.assertEqual(status, EXIT_OK, message)
        self.assertEqual(lines[0], '# config=unit_speed_1d seed=0')
        self.assertEqual(lines[1], 'item,verdict,detail')
        items = [row[0] for row in payload['rows']]
        self.assertIn('certify:semiconcavity', items)
        self.assertIn('steer:far', items)

    def test_unknown_command(self):
        status, _, _ = ExperimentService.run('plot', CONFIGS / 'unit_speed_1d.json')
        self.assertEqual(status, EXIT_CONFIGURATION_ERROR)


class MalformedConfigTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.data = json.loads((CONFIGS / 'unit_speed_1d.json').read_text(encoding='utf-8'))

    def tearDown(self):
        self.tmp.cleanup()

    def run_with(self, command, **options):
        path = Path(self.tmp.name) / 'config.json'
        path.write_text(json.dumps(self.data), encoding='utf-8')
        return ExperimentService.run(command, path, Path(self.tmp.name) / 'out', **options)

    def test_domain_of_the_wrong_dimension(self):
        self.data['validation']['domain'] = [[-3.0, -3.0], [3.0, 3.0]]
        status, message, _ = self.run_with('validate')

        self.assertEqual(status, EXIT_CONFIGURATION_ERROR)
        self.assertIn('validation.domain:', message)

    def test_increasing_h_scales(self):
        self.data['validation']['h_scales'] = [0.025, 0.05]
        status, message, _ = self.run_with('validate')

        self.assertEqual(status, EXIT_CONFIGURATION_ERROR)
        self.assertIn('validation.h_scales:', message)

    def test_check_without_a_history(self):
        del self.data['experiments']['dpp']['history']
        status, message, _ = self.run_with('certify', check='dpp')

        self.assertEqual(status, EXIT_CONFIGURATION_ERROR)
        self.assertIn('experiments.dpp.history', message)

    def test_family_on_another_grid(self):
        self.data['experiments']['families']['bump'] = [{'samples': [[0.1], [0.1], [0.1]]}]
        status, message, _ = self.run_with('certify', check='semiconcavity')

        self.assertEqual(status, EXIT_CONFIGURATION_ERROR)
        self.assertIn('experiments.semiconcavity:', message)
