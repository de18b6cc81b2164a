from __future__ import unicode_literals

import itertools
import unittest

import rfsynth
from rfsynth import pcell


MOM3 = rfsynth.CapStack('MOM3', 1.1, ('M1', 'M2', 'M3'))
MOM5 = rfsynth.CapStack('MOM5', 2.0, ('M1', 'M2', 'M3', 'M4', 'M5'))
TECH = rfsynth.ResTech(rs=50.0, r_end=5.0, pitch_x=0.5, pitch_y=1.0)


def brute_force_capacitor(c_target, stacks, tol, step):
    best = None
    w_idx = pcell.grid_indices(pcell.CAP_W_BOUNDS, step)
    l_idx = pcell.grid_indices(pcell.CAP_L_BOUNDS, step)
    for stack in stacks:
        for iw, il in itertools.product(w_idx.tolist(), l_idx.tolist()):
            c = stack.rho * (iw * step) * (il * step) * 1e-3
            if not pcell.within_tolerance(c, c_target, tol):
                continue
            key = (iw * il, -stack.rho, abs(iw - il), iw, stack.name)
            if best is None or key < best[0]:
                best = (key, stack.name, iw * step, il * step)
    return best[1:] if best else None


def brute_force_resistor(r_target, tech, tol, step, max_tiles):
    best = None
    w_idx = pcell.grid_indices(pcell.RES_W_BOUNDS, step).tolist()
    l_idx = pcell.grid_indices(pcell.RES_L_BOUNDS, step).tolist()
    tiles = range(1, max_tiles + 1)
    for ns, np_, iw, il in itertools.product(tiles, tiles, w_idx, l_idx):
        W, L = iw * step, il * step
        r = ns / np_ * (tech.rs * L / W + 2 * tech.r_end / W)
        if not pcell.within_tolerance(r, r_target, tol):
            continue
        area = ns * np_ * (W + tech.pitch_x) * (L + tech.pitch_y)
        key = (area, ns * np_, ns, iw, il)
        if best is None or key < best[0]:
            best = (key, W, L, ns, np_)
    return best[1:] if best else None


class CapacitorTest(unittest.TestCase):
    def test_value(self):
        self.assertAlmostEqual(pcell.cap_value(MOM3, 10.0, 20.0), 0.22)

    def test_matches_brute_force_on_a_coarse_grid(self):
        for c_target in (0.5, 1.0, 2.3, 17.0):
            design = rfsynth.optimize_capacitor(
                c_target, [MOM3, MOM5], tol=0.01, step=1.0
            )
            expected = brute_force_capacitor(
                c_target, [MOM3, MOM5], tol=0.01, step=1.0
            )

            self.assertEqual(
                (design.stack.name, design.W, design.L), expected
            )

    def test_result_is_within_tolerance_and_bounds(self):
        design = rfsynth.optimize_capacitor(2.0, [MOM3, MOM5], tol=0.005)

        self.assertTrue(pcell.within_tolerance(design.c_pF, 2.0, 0.005))
        self.assertTrue(1.0 <= design.W <= 330.0)
        self.assertTrue(1.0 <= design.L <= 60.0)
        self.assertAlmostEqual(design.area, design.W * design.L)

    def test_denser_stack_wins(self):
        design = rfsynth.optimize_capacitor(1.0, [MOM3, MOM5], step=0.01)

        self.assertEqual(design.stack.name, 'MOM5')
        self.assertAlmostEqual(design.area, 500.0, delta=3.0)

    def test_too_small_target(self):
        with self.assertRaises(rfsynth.Unsatisfiable):
            rfsynth.optimize_capacitor(1e-6, [MOM3])

    def test_too_large_target(self):
        with self.assertRaises(rfsynth.Unsatisfiable):
            rfsynth.optimize_capacitor(1e3, [MOM3, MOM5])

    def test_cell_name(self):
        design = pcell.CapDesign(MOM5, 12.5, 40.0, 500.0, 1.0)

        self.assertEqual(design.cell_name, 'CAP_MOM5_12p50x40p00')


class CapGeometryTest(unittest.TestCase):
    def setUp(self):
        design = pcell.CapDesign(MOM3, 30.0, 20.0, 600.0, 0.66)
        self.cell = rfsynth.cap_geometry(design)

    def test_one_plate_per_layer(self):
        self.assertEqual(
            [(s.layer, s.terminal) for s in self.cell.shapes],
            [('M1', 'A'), ('M2', 'B'), ('M3', 'A')],
        )
        for shape in self.cell.shapes:
            self.assertEqual(shape.rect, rfsynth.Rect(0.0, 0.0, 30.0, 20.0))

    def test_cell(self):
        self.assertEqual(self.cell.name, 'CAP_MOM3_30p00x20p00')
        self.assertEqual(self.cell.kind, 'capacitor')
        self.assertEqual(
            [(p.name, p.x, p.y) for p in self.cell.pins],
            [('A', 0.0, 10.0), ('B', 30.0, 10.0)],
        )


class ResistorTest(unittest.TestCase):
    def test_value(self):
        self.assertAlmostEqual(pcell.resistor_stripe(TECH, 1.0, 9.8), 500.0)
        self.assertAlmostEqual(
            pcell.resistor_value(TECH, 1.0, 9.8, 2, 4), 250.0
        )

    def test_matches_brute_force_on_a_coarse_grid(self):
        for r_target in (50.0, 500.0, 2200.0):
            design = rfsynth.optimize_resistor(
                r_target, TECH, tol=0.005, step=0.1, max_tiles=4
            )
            expected = brute_force_resistor(
                r_target, TECH, tol=0.005, step=0.1, max_tiles=4
            )

            self.assertEqual(
                (design.W, design.L, design.Ns, design.Np), expected
            )

    def test_result_is_within_tolerance(self):
        design = rfsynth.optimize_resistor(1234.0, TECH)

        self.assertTrue(rfsynth.within_tolerance(design.r_ohm, 1234.0, 0.005))
        self.assertTrue(1 <= design.Ns <= 64 and 1 <= design.Np <= 64)
        self.assertAlmostEqual(
            design.area,
            rfsynth.resistor_area(
                TECH, design.W, design.L, design.Ns, design.Np
            ),
        )

    def test_area(self):
        self.assertAlmostEqual(
            rfsynth.resistor_area(TECH, 1.0, 4.0, 2, 3),
            6 * (1.0 + TECH.pitch_x) * (4.0 + TECH.pitch_y),
        )

    def test_within_tolerance(self):
        self.assertTrue(rfsynth.within_tolerance(100.5, 100.0, 0.005))
        self.assertTrue(rfsynth.within_tolerance(99.5, 100.0, 0.005))
        self.assertFalse(rfsynth.within_tolerance(100.6, 100.0, 0.005))

    def test_unsatisfiable(self):
        with self.assertRaises(rfsynth.Unsatisfiable):
            rfsynth.optimize_resistor(1e9, TECH, max_tiles=2)

    def test_cell_name(self):
        design = pcell.ResDesign(1.5, 4.0, 2, 3, 0.0, 0.0)

        self.assertEqual(design.cell_name, 'RES_1p50x4p00_2s3p')


class ResGeometryTest(unittest.TestCase):
    def setUp(self):
        self.design = pcell.ResDesign(1.0, 4.0, 2, 3, 0.0, 0.0)
        self.cell = rfsynth.res_geometry(self.design, TECH)

    def test_size(self):
        self.assertEqual((self.cell.width, self.cell.height), (4.0, 9.0))

    def test_stripes_and_contacts(self):
        stripes = [s.rect for s in self.cell.shapes if s.layer == 'RES']
        contacts = [s.rect for s in self.cell.shapes if s.layer == 'M1']

        self.assertEqual(len(stripes), 6)
        self.assertEqual(len(contacts), 12)
        for contact in contacts:
            self.assertTrue(
                any(
                    s.x0 <= contact.x0
                    and contact.x1 <= s.x1
                    and s.y0 <= contact.y0
                    and contact.y1 <= s.y1
                    for s in stripes
                )
            )
        for i, a in enumerate(stripes):
            for b in stripes[i + 1 :]:
                self.assertGreater(rfsynth.rect_distance(a, b), 0.0)

    def test_pins(self):
        self.assertEqual(
            [(p.name, p.x, p.y) for p in self.cell.pins],
            [('A', 0.5, 0.0), ('B', 3.5, 9.0)],
        )
