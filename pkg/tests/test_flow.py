from __future__ import unicode_literals

import json
import os
import shutil
import tempfile
import unittest

import rfsynth
from rfsynth import neuralnet

import tests
from tests import mock


PA_COMPONENTS = {'M1', 'R1', 'L1', 'L2', 'C1'}


class FlowTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        flow = rfsynth.Flow(tests.small_config())
        flow.train_model(save=False)
        cls.model, cls.stats = flow.model, flow.stats

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tmpdir)
        self.flow = self.make_flow()

    def make_flow(self):
        flow = rfsynth.Flow(tests.small_config())
        flow.model, flow.stats = self.model, self.stats
        return flow

    def write(self, name, text):
        filename = os.path.join(self.tmpdir, name)
        with open(filename, 'w', encoding='utf-8') as fh:
            fh.write(text)
        return filename

    def test_default_config(self):
        flow = rfsynth.Flow()

        self.assertIsInstance(flow.config, rfsynth.Config)
        self.assertIsNone(flow.model)

    def test_invalid_config_is_rejected(self):
        config = rfsynth.Config()
        config.freq_high = 1.0

        with self.assertRaises(rfsynth.ConfigError):
            rfsynth.Flow(config)

    def test_stage_records_timing_and_events(self):
        started, finished = mock.Mock(), mock.Mock()
        self.flow.on(rfsynth.FlowEvent.STAGE_STARTED, started)
        self.flow.on(rfsynth.FlowEvent.STAGE_FINISHED, finished)
        report = rfsynth.PipelineReport()

        with self.flow.stage('pcell', report):
            pass

        self.assertEqual(list(report.stages), ['pcell'])
        started.assert_called_once_with('pcell')
        self.assertEqual(finished.call_args[0][0], 'pcell')

    def test_stage_wraps_errors(self):
        finished = mock.Mock()
        self.flow.on(rfsynth.FlowEvent.STAGE_FINISHED, finished)

        with self.assertRaises(rfsynth.StageError) as ctx:
            with self.flow.stage('routing'):
                raise rfsynth.Unroutable('no path')

        self.assertEqual(ctx.exception.stage, 'routing')
        self.assertIsInstance(ctx.exception.error, rfsynth.Unroutable)
        self.assertFalse(finished.called)

    def test_stage_leaves_other_exceptions_alone(self):
        with self.assertRaises(KeyError):
            with self.flow.stage('routing'):
                raise KeyError('x')

    def test_size_components(self):
        circuit = rfsynth.parse_netlist('R1 a b 500\nC1 a b 2\nM1 a b c\n')
        report = rfsynth.PipelineReport()

        cells = self.flow.size_components(circuit, report)

        self.assertEqual(list(cells), ['R1', 'C1', 'M1'])
        self.assertTrue(cells['R1'].name.startswith('RES_'))
        self.assertTrue(cells['C1'].name.startswith('CAP_'))
        self.assertEqual(cells['M1'].name, 'NMOS_10p00')
        self.assertEqual([e['id'] for e in report.pcells], ['R1', 'C1'])
        self.assertLessEqual(abs(report.pcells[0]['value'] - 500), 2.5)
        self.assertLessEqual(abs(report.pcells[1]['value'] - 2), 0.01)

    def test_inductor_spec_falls_back_to_defaults(self):
        circuit = rfsynth.parse_netlist(
            '.FREQ 20\nL1 a b 250\nL2 a b 300 F=28 W=3\n'
        )

        self.assertEqual(
            self.flow.inductor_spec(circuit, circuit.component('L1')),
            (20.0, 5.0, 250.0),
        )
        self.assertEqual(
            self.flow.inductor_spec(circuit, circuit.component('L2')),
            (28.0, 3.0, 300.0),
        )

    def test_design_inductors(self):
        circuit = rfsynth.parse_netlist('L1 a b 250 F=28 W=5\n')
        report = rfsynth.PipelineReport()

        cells = self.flow.design_inductors(circuit, report)

        self.assertTrue(cells['L1'].name.startswith('IND_5p00_'))
        (entry,) = report.inductors
        self.assertEqual(entry['id'], 'L1')
        self.assertGreater(entry['q_oracle'], 0)
        self.assertLessEqual(entry['steps'], 300)

    def test_no_inductors_needs_no_model(self):
        circuit = rfsynth.parse_netlist('R1 a b 500\n')

        with mock.patch.object(self.flow, 'load_model') as load_model:
            cells = self.flow.design_inductors(circuit)

        self.assertEqual(cells, {})
        self.assertFalse(load_model.called)

    def test_load_model_trains_without_checkpoint(self):
        flow = rfsynth.Flow(tests.small_config())

        with mock.patch.object(flow, 'train_model') as train_model:
            flow.load_model()

        train_model.assert_called_once_with()

    def test_load_model_reads_checkpoint(self):
        path = os.path.join(self.tmpdir, 'q.json')
        neuralnet.save_checkpoint(path, self.model, self.stats)
        config = tests.small_config()
        config.checkpoint = path
        flow = rfsynth.Flow(config)

        with mock.patch.object(flow, 'train_model') as train_model:
            model, _ = flow.load_model()

        self.assertFalse(train_model.called)
        self.assertEqual(model.num_params, self.model.num_params)

    def test_train_model_saves_beside_tech_file(self):
        tech = self.write('small.tech', tests.SMALL_TECH)
        config = rfsynth.Config().load_tech_file(tech)
        flow = rfsynth.Flow(config)

        report, scores = flow.train_model(samples=300, epochs=2)

        self.assertTrue(
            os.path.exists(os.path.join(self.tmpdir, 'rfsynth-q.json'))
        )
        self.assertLessEqual(report.epochs, 2)
        self.assertGreater(scores.rmse, 0)

    def test_synth_class_b_pa(self):
        out = os.path.join(self.tmpdir, 'pa.gds')

        lib, report = self.flow.synth(tests.CLASS_B_PA, out=out)

        self.assertEqual(list(report.stages), list(rfsynth.STAGES))
        self.assertEqual(report.output, out)
        self.assertEqual(rfsynth.load_gds(out), lib)
        top = lib.structure('TOP')
        self.assertEqual(len(top.references), 5)
        self.assertEqual(
            {s.name for s in lib.structures},
            {'TOP'} | {r.name for r in top.references},
        )
        self.assertEqual(
            {d['id'] for d in report.placement['devices']}, PA_COMPONENTS
        )
        self.assertEqual(len(report.inductors), 2)
        self.assertEqual(
            json.loads(report.to_json())['status'], report.status
        )

    @mock.patch('rfsynth.inductor.inverse_design')
    def test_synth_class_b_pa_is_clean(self, inverse_design_mock):
        # a 20 um feed gap keeps both inductor pin corridors apart
        inverse_design_mock.return_value = rfsynth.inductor.InverseResult(
            vars=rfsynth.inductor.LayoutVars(60.0, 60.0, 20.0),
            q_pred=10.0,
            trace=[],
            steps=0,
            seconds=0.0,
        )

        lib, report = self.flow.synth(tests.CLASS_B_PA)

        self.assertEqual(inverse_design_mock.call_count, 2)
        self.assertTrue(report.clean, report.to_json())
        self.assertEqual(report.unrouted, {})
        self.assertEqual(len(lib.structure('TOP').references), 5)
        self.assertEqual(
            [(d['Lh'], d['Lcn']) for d in report.inductors],
            [(60.0, 20.0), (60.0, 20.0)],
        )

    def test_synth_is_deterministic(self):
        first, _ = self.flow.synth(tests.CLASS_B_PA)
        second, _ = self.make_flow().synth(tests.CLASS_B_PA)

        self.assertEqual(rfsynth.write_gds(first), rfsynth.write_gds(second))

    def test_synth_empty_netlist(self):
        lib, report = self.flow.synth(rfsynth.Netlist())

        self.assertEqual([s.name for s in lib.structures], ['TOP'])
        self.assertEqual(lib.structure('TOP').elements, [])
        self.assertTrue(report.clean)

    def test_synth_unsatisfiable_capacitor(self):
        source = self.write('big.sp', 'C1 a b 100000\nR1 a b 50\n.END\n')
        out = os.path.join(self.tmpdir, 'big.gds')

        with self.assertRaises(rfsynth.StageError) as ctx:
            self.flow.synth(source, out=out)

        self.assertEqual(ctx.exception.stage, 'pcell')
        self.assertIsInstance(ctx.exception.error, rfsynth.Unsatisfiable)
        self.assertFalse(os.path.exists(out))

    def test_synth_invalid_netlist(self):
        source = self.write('nofreq.sp', 'L1 a b 250\nR1 a b 50\n')

        with self.assertRaises(rfsynth.StageError) as ctx:
            self.flow.synth(source)

        self.assertEqual(ctx.exception.stage, 'netlist')
        self.assertIsInstance(ctx.exception.error, rfsynth.ValidationError)

    @tests.slow
    def test_synth_class_b_pa_is_clean_with_full_model(self):
        lib, report = rfsynth.Flow().synth(tests.CLASS_B_PA)

        self.assertTrue(report.clean, report.to_json())
        self.assertEqual(len(lib.structure('TOP').references), 5)


class PipelineReportTest(unittest.TestCase):
    def test_empty_report_is_clean(self):
        report = rfsynth.PipelineReport()

        self.assertTrue(report.clean)
        self.assertEqual(report.status, 'clean')

    def test_unrouted_net_is_not_clean(self):
        report = rfsynth.PipelineReport()
        report.unrouted['vdd'] = 'no path'

        self.assertFalse(report.clean)
        self.assertEqual(report.status, 'violations')

    def test_to_dict(self):
        report = rfsynth.PipelineReport()
        report.stages['netlist'] = 0.1234567
        report.violations = [
            rfsynth.Violation('error', 0, 'NetClearance', 'too close')
        ]

        doc = report.to_dict()

        self.assertEqual(
            list(doc),
            [
                'status',
                'output',
                'stages',
                'pcells',
                'inductors',
                'placement',
                'wirelength',
                'vias',
                'violations',
                'unrouted',
            ],
        )
        self.assertEqual(doc['stages']['netlist'], 0.123457)
        self.assertEqual(doc['violations'], ['error:0:too close'])

    def test_save(self):
        tmpdir = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, tmpdir)
        filename = os.path.join(tmpdir, 'report.json')

        rfsynth.PipelineReport().save(filename)

        with open(filename, encoding='utf-8') as fh:
            self.assertEqual(json.load(fh)['status'], 'clean')
