from __future__ import unicode_literals

import unittest

import rfsynth
from rfsynth import netlist

import tests


class ParseNetlistTest(unittest.TestCase):
    def test_class_b_pa_fixture(self):
        circuit = rfsynth.load_netlist(tests.CLASS_B_PA)

        self.assertEqual(circuit.title, 'class_b_pa')
        self.assertEqual(circuit.global_freq, 28.0)
        self.assertEqual(
            [c.id for c in circuit.components], ['M1', 'R1', 'L1', 'L2', 'C1']
        )
        self.assertEqual(
            sorted(circuit.net('drain').pins),
            [('L1', 1), ('L2', 0), ('M1', 1)],
        )
        self.assertEqual(circuit.net('drain').weight, 3.0)
        self.assertEqual(circuit.net('out').weight, 2.0)
        self.assertEqual(circuit.net('gate').weight, 1.0)
        self.assertEqual(circuit.declared, frozenset(['drain', 'out']))

    def test_component_fields(self):
        circuit = rfsynth.parse_netlist(
            'R1 a b 500\nC1 b 0 0.25\nL1 a b 250 F=28 W=5\nM1 g d s\n'
        )

        self.assertEqual(
            circuit.component('R1'),
            rfsynth.ComponentInstance(
                'R1', 'resistor', 500.0, ('a', 'b'), None, None
            ),
        )
        self.assertEqual(circuit.component('C1').value, 0.25)
        inductor = circuit.component('L1')
        self.assertEqual(inductor.kind, 'inductor')
        self.assertEqual((inductor.freq_hint, inductor.width_hint), (28.0, 5.0))
        transistor = circuit.component('M1')
        self.assertEqual(transistor.kind, 'nmos')
        self.assertIsNone(transistor.value)
        self.assertEqual(transistor.terminals, ('g', 'd', 's'))

    def test_comments_blank_lines_and_end(self):
        circuit = rfsynth.parse_netlist(
            '* a comment\n\nR1 a b 10\n.END\nthis is never parsed\n'
        )

        self.assertEqual(len(circuit.components), 1)

    def test_line_numbers_are_kept(self):
        circuit = rfsynth.parse_netlist('* header\nR1 a b 10\n\nC1 a b 1\n')

        self.assertEqual(circuit.line_of('R1'), 2)
        self.assertEqual(circuit.line_of('C1'), 4)
        self.assertEqual(circuit.line_of('X9'), 0)

    def test_unknown_element_fails(self):
        with self.assertRaises(rfsynth.NetlistSyntaxError) as ctx:
            rfsynth.parse_netlist('R1 a b 10\nQ1 a b c\n')

        self.assertEqual(ctx.exception.line, 2)

    def test_unknown_directive_fails(self):
        with self.assertRaises(rfsynth.NetlistSyntaxError):
            rfsynth.parse_netlist('.TRAN 1n 10n\n')

    def test_malformed_value_fails(self):
        with self.assertRaises(rfsynth.NetlistSyntaxError) as ctx:
            rfsynth.parse_netlist('R1 a b 5k\n')

        self.assertEqual(ctx.exception.line, 1)

    def test_non_finite_value_fails(self):
        with self.assertRaises(rfsynth.NetlistSyntaxError):
            rfsynth.parse_netlist('C1 a b nan\n')

    def test_option_on_resistor_fails(self):
        with self.assertRaises(rfsynth.NetlistSyntaxError):
            rfsynth.parse_netlist('R1 a b 10 F=5\n')

    def test_option_before_positional_field_fails(self):
        with self.assertRaises(rfsynth.NetlistSyntaxError):
            rfsynth.parse_netlist('L1 a F=5 b 100\n')

    def test_repeated_option_fails(self):
        with self.assertRaises(rfsynth.NetlistSyntaxError):
            rfsynth.parse_netlist('L1 a b 100 F=5 F=6\n')

    def test_net_weight_below_one_fails(self):
        with self.assertRaises(rfsynth.NetlistSyntaxError):
            rfsynth.parse_netlist('.NET clk W=0.5\n')

    def test_duplicate_id_fails(self):
        with self.assertRaises(rfsynth.DuplicateId) as ctx:
            rfsynth.parse_netlist('R1 a b 10\nR1 b c 20\n')

        self.assertEqual(ctx.exception.line, 2)
        self.assertEqual(ctx.exception.component_id, 'R1')

    def test_wrong_terminal_count_fails(self):
        with self.assertRaises(rfsynth.ArityError) as ctx:
            rfsynth.parse_netlist('M1 g d\n')

        self.assertEqual(ctx.exception.component_id, 'M1')
        self.assertIn('expects 3 terminals, got 2', str(ctx.exception))

    def test_duplicate_id_is_a_netlist_error(self):
        with self.assertRaises(rfsynth.Error):
            rfsynth.parse_netlist('C1 a b 1\nC1 a b 1\n')


class SerializeTest(unittest.TestCase):
    def test_serialized_fixture_parses_to_equal_netlist(self):
        circuit = rfsynth.load_netlist(tests.CLASS_B_PA)

        text = rfsynth.serialize(circuit)

        self.assertEqual(rfsynth.parse_netlist(text), circuit)

    def test_serialize_is_a_fixpoint(self):
        circuit = rfsynth.load_netlist(tests.CLASS_B_PA)
        text = rfsynth.serialize(circuit)

        self.assertEqual(rfsynth.serialize(rfsynth.parse_netlist(text)), text)

    def test_serialized_form(self):
        circuit = rfsynth.parse_netlist('.FREQ 10\n.NET x W=2\nR1 x y 50\n')

        self.assertEqual(
            rfsynth.serialize(circuit),
            '.FREQ 10.0\n.NET x W=2.0\nR1 x y 50.0\n.END\n',
        )

    def test_netlists_differ_by_weight(self):
        a = rfsynth.parse_netlist('.NET x W=2\nR1 x y 50\n')
        b = rfsynth.parse_netlist('.NET x W=3\nR1 x y 50\n')

        self.assertNotEqual(a, b)

    def test_equality_ignores_line_numbers(self):
        a = rfsynth.parse_netlist('R1 x y 50\n')
        b = rfsynth.parse_netlist('* comment\n\nR1 x y 50\n')

        self.assertEqual(a, b)


class ValidateTest(unittest.TestCase):
    def codes(self, violations):
        return [v.code for v in violations]

    def test_fixture_is_clean(self):
        circuit = rfsynth.load_netlist(tests.CLASS_B_PA)

        self.assertEqual(rfsynth.validate(circuit, default_width=5.0), [])

    def test_inductor_without_frequency(self):
        circuit = rfsynth.parse_netlist('L1 a b 100 W=5\nR1 a b 10\n')

        violations = rfsynth.validate(circuit)

        self.assertEqual(
            self.codes(violations), [netlist.ViolationType.MISSING_FREQUENCY]
        )
        self.assertEqual(violations[0].severity, 'error')
        self.assertEqual(violations[0].line, 1)

    def test_inductor_takes_global_frequency(self):
        circuit = rfsynth.parse_netlist('.FREQ 10\nL1 a b 100 W=5\nR1 a b 1\n')

        self.assertEqual(rfsynth.validate(circuit), [])

    def test_inductor_without_width(self):
        circuit = rfsynth.parse_netlist('L1 a b 100 F=10\nR1 a b 10\n')

        self.assertEqual(
            self.codes(rfsynth.validate(circuit)),
            [netlist.ViolationType.MISSING_WIDTH],
        )
        self.assertEqual(rfsynth.validate(circuit, default_width=5.0), [])

    def test_frequency_out_of_range(self):
        circuit = rfsynth.parse_netlist('.FREQ 500\nR1 a b 10\nC1 a b 1\n')

        violations = rfsynth.validate(circuit)

        self.assertEqual(
            self.codes(violations), [netlist.ViolationType.FREQUENCY_RANGE]
        )
        self.assertEqual(violations[0].line, 1)

    def test_non_positive_value(self):
        circuit = rfsynth.parse_netlist('R1 a b -10\nC1 a b 1\n')

        self.assertEqual(
            self.codes(rfsynth.validate(circuit)),
            [netlist.ViolationType.NON_POSITIVE_VALUE],
        )

    def test_floating_terminal_is_a_warning(self):
        circuit = rfsynth.parse_netlist('R1 a b 10\nC1 a c 1\n')

        violations = rfsynth.validate(circuit)

        self.assertEqual(
            self.codes(violations),
            [
                netlist.ViolationType.FLOATING_TERMINAL,
                netlist.ViolationType.FLOATING_TERMINAL,
            ],
        )
        self.assertTrue(all(v.severity == 'warning' for v in violations))
        self.assertEqual(rfsynth.Error.maybe_raise(violations), violations)

    def test_empty_declared_net_is_a_warning(self):
        circuit = rfsynth.parse_netlist('.NET spare\nR1 a b 10\nC1 a b 1\n')

        violations = rfsynth.validate(circuit)

        self.assertEqual(
            self.codes(violations), [netlist.ViolationType.EMPTY_NET]
        )
        self.assertEqual(violations[0].line, 1)

    def test_strict_mode_needs_declared_nets(self):
        circuit = rfsynth.parse_netlist('.NET a\nR1 a b 10\nC1 a b 1\n')

        self.assertEqual(rfsynth.validate(circuit), [])
        violations = rfsynth.validate(circuit, strict=True)
        self.assertEqual(
            self.codes(violations),
            [
                netlist.ViolationType.UNDECLARED_NET,
                netlist.ViolationType.UNDECLARED_NET,
            ],
        )

    def test_violation_string(self):
        violation = rfsynth.Violation(
            'error', 4, 'EmptyNet', 'net x has no pins'
        )

        self.assertEqual(str(violation), 'error:4:net x has no pins')
