from __future__ import unicode_literals

import unittest

import rfsynth
from rfsynth import placement

import tests
from tests import device, net


class MinSpacingTest(unittest.TestCase):
    def setUp(self):
        self.rules = rfsynth.EmRules()

    def test_below_band(self):
        self.assertAlmostEqual(rfsynth.min_spacing(2.0, self.rules), 11.5)

    def test_above_band(self):
        self.assertAlmostEqual(rfsynth.min_spacing(60.0, self.rules), 34.5)

    def test_linear_in_band(self):
        self.assertAlmostEqual(rfsynth.min_spacing(22.5, self.rules), 23.0)

    def test_band_edges_are_continuous(self):
        self.assertAlmostEqual(rfsynth.min_spacing(5.0, self.rules), 11.5)
        self.assertAlmostEqual(rfsynth.min_spacing(40.0, self.rules), 34.5)

    def test_guard_fraction(self):
        rules = rfsynth.EmRules(guard_fraction=0.1)

        self.assertAlmostEqual(rfsynth.min_spacing(2.0, rules), 11.0)


class PlacementTest(unittest.TestCase):
    def setUp(self):
        self.devices = [device('A', 10.0, 4.0), device('B', 10.0, 4.0)]
        self.placement = rfsynth.Placement(
            self.devices, {'A': (0.0, 0.0, 0), 'B': (100.0, 50.0, 90)}
        )

    def test_bbox_of_rotated_device(self):
        self.assertEqual(
            self.placement.bbox('B'), rfsynth.Rect(100.0, 50.0, 104.0, 60.0)
        )

    def test_pin_position(self):
        self.assertEqual(self.placement.pin_position('A', 1), (10.0, 2.0))
        self.assertEqual(self.placement.pin_position('B', 'B'), (102.0, 60.0))

    def test_moved_leaves_original(self):
        moved = self.placement.moved('A', x=5.0, theta=180)

        self.assertEqual(moved.position('A'), (5.0, 0.0, 180))
        self.assertEqual(self.placement.position('A'), (0.0, 0.0, 0))
        self.assertNotEqual(moved, self.placement)

    def test_translated(self):
        shifted = self.placement.translated(1.0, 2.0)

        self.assertEqual(shifted.position('B'), (101.0, 52.0, 90))

    def test_container(self):
        self.assertEqual(len(self.placement), 2)
        self.assertIn('A', self.placement)
        self.assertNotIn('C', self.placement)
        self.assertEqual(self.placement.ids, ['A', 'B'])

    def test_bad_rotation(self):
        with self.assertRaises(AssertionError):
            rfsynth.Placement(self.devices[:1], {'A': (0.0, 0.0, 45)})

    def test_records(self):
        self.assertEqual(
            [dict(r) for r in self.placement.to_records()],
            [
                {'id': 'A', 'x': 0.0, 'y': 0.0, 'theta': 0},
                {'id': 'B', 'x': 100.0, 'y': 50.0, 'theta': 90},
            ],
        )

    def test_footprint_from_cell(self):
        cell = rfsynth.transistor_box(10.0)

        footprint = rfsynth.footprint_from_cell('M1', cell)

        self.assertEqual(footprint.id, 'M1')
        self.assertEqual(footprint.kind, 'nmos')
        self.assertEqual([p.name for p in footprint.pins], ['G', 'D', 'S'])


class ConnectivityTest(unittest.TestCase):
    def test_order_by_degree_is_stable(self):
        devices = [device('R1', 1, 1), device('R2', 1, 1), device('R3', 1, 1)]
        nets = [
            net('a', [('R2', 0), ('R3', 0)]),
            net('b', [('R3', 1), ('R1', 0)]),
        ]

        self.assertEqual(placement.connectivity_degree('R3', nets), 2)
        self.assertEqual(
            placement.connectivity_order(devices, nets), ['R3', 'R1', 'R2']
        )


class InitialPlacementTest(unittest.TestCase):
    def test_rows_wrap_at_the_width_cap(self):
        devices = [device('D%d' % i, 10.0, 10.0) for i in range(9)]

        start = placement.initial_placement(devices, [], 5.0)

        self.assertEqual(
            [start.position('D%d' % i)[:2] for i in range(9)],
            [(15.0 * i, 0.0) for i in range(6)]
            + [(15.0 * i, 15.0) for i in range(3)],
        )

    def test_no_overlap_and_spacing(self):
        devices = [
            device('D%d' % i, 3.0 + i, 12.0 - i) for i in range(7)
        ]

        start = placement.initial_placement(devices, [], 4.0)

        boxes = start.boxes()
        for i, a in enumerate(boxes):
            for b in boxes[i + 1 :]:
                self.assertGreaterEqual(
                    rfsynth.rect_distance(a, b), 4.0 - 1e-9
                )


class CostTest(unittest.TestCase):
    def setUp(self):
        self.devices = [device('A', 10.0, 4.0), device('B', 10.0, 4.0)]
        self.nets = [net('n', [('A', 1), ('B', 0)], weight=2.0)]

    def test_weighted_hpwl(self):
        placed = rfsynth.Placement(
            self.devices, {'A': (0.0, 0.0, 0), 'B': (20.0, 10.0, 0)}
        )

        self.assertEqual(rfsynth.hpwl(placed, self.nets), 40.0)

    def test_overlap_dominates(self):
        placed = rfsynth.Placement(
            self.devices, {'A': (0.0, 0.0, 0), 'B': (5.0, 2.0, 0)}
        )

        cost = rfsynth.placement_cost(placed, self.nets, K=1e4)

        self.assertEqual(cost.overlap, 10.0)
        self.assertEqual(cost.spacing, 0.0)
        self.assertEqual(cost.total, cost.hpwl + 1e5)

    def test_spacing_deficit(self):
        placed = rfsynth.Placement(
            self.devices, {'A': (0.0, 0.0, 0), 'B': (12.0, 0.0, 0)}
        )

        cost = rfsynth.placement_cost(
            placed, self.nets, spacing=5.0, spacing_weight=2.0
        )

        self.assertEqual(cost.spacing, 9.0)
        self.assertEqual(cost.total, cost.hpwl + 18.0)


class LocalSearchTest(unittest.TestCase):
    def setUp(self):
        self.devices = [device('D%d' % i, 8.0, 8.0) for i in range(5)]
        self.nets = [
            net('a', [('D0', 1), ('D4', 0)], weight=3.0),
            net('b', [('D1', 1), ('D3', 0)]),
            net('c', [('D2', 1), ('D0', 0)]),
        ]
        self.start = placement.initial_placement(self.devices, self.nets, 6.0)

    def cost_fn(self, p):
        return rfsynth.placement_cost(p, self.nets, spacing=6.0)

    def test_cost_never_increases(self):
        result, trace = placement.local_search(
            self.start, self.cost_fn, 200, seed=1
        )

        self.assertEqual(trace[0], self.cost_fn(self.start).total)
        for a, b in zip(trace, trace[1:]):
            self.assertLess(b, a)
        self.assertEqual(self.cost_fn(result).total, trace[-1])
        self.assertEqual(self.cost_fn(result).overlap, 0.0)

    def test_seeded_search_is_deterministic(self):
        first = placement.local_search(self.start, self.cost_fn, 100, seed=4)
        second = placement.local_search(self.start, self.cost_fn, 100, seed=4)

        self.assertEqual(first[0], second[0])
        self.assertEqual(first[1], second[1])

    def test_accepted_moves_are_emitted(self):
        emitter = rfsynth.utils.EventEmitter()
        callback = tests.mock.Mock()
        emitter.on(rfsynth.PlacementEvent.MOVE_ACCEPTED, callback)

        _, trace = placement.local_search(
            self.start, self.cost_fn, 100, seed=2, emitter=emitter
        )

        self.assertEqual(callback.call_count, len(trace) - 1)

    def test_zero_moves(self):
        result, trace = placement.local_search(self.start, self.cost_fn, 0)

        self.assertEqual(result, self.start)
        self.assertEqual(len(trace), 1)

    def test_positions_stay_on_pitch(self):
        result, _ = placement.local_search(
            self.start, self.cost_fn, 100, seed=3, pitch=0.5
        )

        for device_id in result.ids:
            x, y, _ = result.position(device_id)
            self.assertAlmostEqual(x / 0.5, round(x / 0.5))
            self.assertAlmostEqual(y / 0.5, round(y / 0.5))


class RotationTest(unittest.TestCase):
    def setUp(self):
        self.rules = rfsynth.EmRules()
        self.devices = [
            device('D', 4.0, 4.0, pins=[('P', 4.0, 2.0)]),
            device('X', 4.0, 4.0),
        ]
        self.placed = rfsynth.Placement(
            self.devices, {'D': (0.0, 0.0, 0), 'X': (5.0, 0.0, 0)}
        )
        self.region = self.placed.bounding_box().inflate(50.0)

    def test_score_of_blocked_pin(self):
        score = rfsynth.rotation_score(
            'D', 0, self.placed, self.rules, self.region
        )

        self.assertAlmostEqual(score, 1.0 - 2.0)

    def test_blocked_pin_is_turned_away(self):
        rotated = rfsynth.select_rotations(
            self.placed, self.rules, region=self.region
        )

        theta = rotated.position('D').theta
        self.assertNotEqual(theta, 0)
        self.assertGreater(
            rfsynth.rotation_score(
                'D', theta, rotated, self.rules, self.region
            ),
            0.0,
        )
        self.assertEqual(rotated.total_overlap(), 0.0)

    def test_free_device_keeps_rotation(self):
        alone = rfsynth.Placement(self.devices[:1], {'D': (0.0, 0.0, 0)})

        rotated = rfsynth.select_rotations(alone, self.rules)

        self.assertEqual(rotated.position('D').theta, 0)

    def test_nmos_source_escapes_vertically(self):
        nmos = rfsynth.footprint_from_cell('M1', rfsynth.transistor_box(10.0))
        blocker = device('X', 10.0, 2.0)
        placed = rfsynth.Placement(
            [nmos, blocker], {'M1': (0.0, 0.0, 0), 'X': (0.0, -3.0, 0)}
        )
        region = placed.bounding_box().inflate(50.0)

        # The source pin faces the blocker 1 um below.
        self.assertAlmostEqual(
            rfsynth.rotation_score('M1', 0, placed, self.rules, region),
            1.0 - 2.0,
        )


class PlaceTest(unittest.TestCase):
    def setUp(self):
        self.devices = [
            device('R1', 6.0, 3.0),
            device('C1', 20.0, 20.0),
            device('L1', 40.0, 30.0),
            rfsynth.footprint_from_cell('M1', rfsynth.transistor_box(10.0)),
        ]
        self.nets = [
            net('in', [('R1', 0), ('M1', 0)]),
            net('drain', [('M1', 1), ('L1', 1), ('C1', 0)], weight=3.0),
            net('out', [('C1', 1), ('R1', 1), ('L1', 0)]),
        ]

    def test_place(self):
        result = rfsynth.place(
            self.devices, self.nets, rfsynth.EmRules(), freq=10.0, seed=0
        )

        self.assertEqual(set(result.placement.ids), {'R1', 'C1', 'L1', 'M1'})
        self.assertEqual(result.final.overlap, 0.0)
        self.assertLessEqual(result.final.total, result.initial.total + 1e-9)
        self.assertEqual(result.trace[0], result.initial.total)

    def test_place_is_deterministic(self):
        a = rfsynth.place(self.devices, self.nets, rfsynth.EmRules(), 10.0)
        b = rfsynth.place(self.devices, self.nets, rfsynth.EmRules(), 10.0)

        self.assertEqual(a.placement, b.placement)
        self.assertEqual(a.trace, b.trace)

    def test_single_device(self):
        result = rfsynth.place(
            self.devices[:1], [], rfsynth.EmRules(), freq=10.0
        )

        self.assertEqual(result.placement.position('R1'), (0.0, 0.0, 0))
        self.assertEqual(result.trace, [0.0])
