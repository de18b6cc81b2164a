# encoding: utf-8

from __future__ import unicode_literals

import unittest

from rfsynth import utils

from tests import mock


class EventEmitterTest(unittest.TestCase):
    def setUp(self):
        self.emitter = utils.EventEmitter()

    def test_event_args_come_before_user_args(self):
        listener = mock.Mock()
        self.emitter.on('stage_finished', listener, 'flow')

        self.emitter.emit('stage_finished', 'pcell', 0.5)

        listener.assert_called_once_with('pcell', 0.5, 'flow')

    def test_listeners_run_in_registration_order(self):
        calls = []
        self.emitter.on('epoch_finished', lambda n: calls.append(('a', n)))
        self.emitter.on('epoch_finished', lambda n: calls.append(('b', n)))

        self.emitter.emit('epoch_finished', 3)

        self.assertEqual(calls, [('a', 3), ('b', 3)])

    def test_emit_without_listeners_is_a_no_op(self):
        self.emitter.emit('move_accepted', None, 1.0)

        self.assertEqual(self.emitter.num_listeners(), 0)

    def test_off_removes_every_registration_of_a_listener(self):
        first, second = mock.Mock(), mock.Mock()
        self.emitter.on('stage_started', first, 1)
        self.emitter.on('stage_started', first, 2)
        self.emitter.on('stage_started', second)

        self.emitter.off('stage_started', first)
        self.emitter.emit('stage_started', 'routing')

        self.assertFalse(first.called)
        second.assert_called_once_with('routing')

    def test_off_without_listener_clears_the_event(self):
        listener = mock.Mock()
        self.emitter.on('stage_started', listener)
        self.emitter.on('stage_finished', listener)

        self.emitter.off('stage_started')

        self.assertEqual(self.emitter.num_listeners('stage_started'), 0)
        self.assertEqual(self.emitter.num_listeners('stage_finished'), 1)

    def test_off_without_event_clears_everything(self):
        self.emitter.on('stage_started', mock.Mock())
        self.emitter.on('stage_finished', mock.Mock())

        self.emitter.off()

        self.assertEqual(self.emitter.num_listeners(), 0)

    def test_listener_returning_false_is_unregistered(self):
        once = mock.Mock(return_value=False)
        always = mock.Mock(return_value=None)
        self.emitter.on('epoch_finished', once)
        self.emitter.on('epoch_finished', always)

        self.emitter.emit('epoch_finished', 1)
        self.emitter.emit('epoch_finished', 2)

        once.assert_called_once_with(1)
        self.assertEqual(always.call_count, 2)

    def test_num_listeners(self):
        self.assertEqual(self.emitter.num_listeners('stage_started'), 0)

        self.emitter.on('stage_started', mock.Mock())
        self.emitter.on('stage_finished', mock.Mock())
        self.emitter.on('stage_finished', mock.Mock())

        self.assertEqual(self.emitter.num_listeners('stage_finished'), 2)
        self.assertEqual(self.emitter.num_listeners(), 3)


class ToUnicodeTest(unittest.TestCase):
    def test_unicode_is_unchanged(self):
        self.assertEqual(utils.to_unicode('ABC æøå'), 'ABC æøå')

    def test_bytes_are_decoded_as_utf8(self):
        self.assertEqual(utils.to_unicode('µm'.encode('utf-8')), 'µm')

    def test_anything_else_fails(self):
        with self.assertRaises(ValueError):
            utils.to_unicode(None)


class ParseFloatTest(unittest.TestCase):
    def test_parses_numbers(self):
        self.assertEqual(utils.parse_float('2.5'), 2.5)
        self.assertEqual(utils.parse_float('1e3'), 1000.0)

    def test_rejects_non_finite_values(self):
        for text in ('nan', 'inf', '-inf'):
            with self.assertRaises(ValueError):
                utils.parse_float(text)

    def test_rejects_garbage(self):
        with self.assertRaises(ValueError):
            utils.parse_float('10k')


class SnapTest(unittest.TestCase):
    def test_rounds_to_nearest_pitch_multiple(self):
        self.assertEqual(utils.snap(1.23, 0.1), 1.2)
        self.assertEqual(utils.snap(-0.26, 0.1), -0.3)

    def test_is_idempotent(self):
        value = utils.snap(17.349, 0.1)

        self.assertEqual(utils.snap(value, 0.1), value)
