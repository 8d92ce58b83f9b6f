from dataclasses import replace
from itertools import product

import numpy as np
from django.test import SimpleTestCase

from .exceptions import PortMismatch, VectorTableError, VerilogSyntaxError
from .verilog_mini import (
    CostModel,
    PpaMetrics,
    VectorTable,
    elaborate,
    estimate_ppa,
    evaluate_module,
    parse_mini,
    render_verilog_testbench,
    simulate_vectors,
)
from .verilog_mini.netlist import AND2, OR2, XOR2, Gate
from .verilog_mini.ppa import longest_path_levels

AND_GATE = "module and2(input a, input b, output y); assign y = a & b; endmodule"

FULL_ADDER_5 = """
module fa(input a, input b, input cin, output s, output cout);
  wire p = a ^ b;
  assign s = p ^ cin;
  assign cout = (a & b) | (cin & p);
endmodule
"""

FULL_ADDER_7 = """
module fa(input a, input b, input cin, output s, output cout);
  assign s = a ^ b ^ cin;
  assign cout = (a & b) | (a & cin) | (b & cin);
endmodule
"""

ADDER_8 = """
module adder8(input [7:0] a, input [7:0] b, input cin, output [7:0] s, output cout);
  assign {cout, s} = a + b + cin;
endmodule
"""

ADDER_8_TWO_STEP = """
module adder8(input [7:0] a, input [7:0] b, input cin, output [7:0] s, output cout);
  wire [8:0] t = a + b;
  assign {cout, s} = t + cin;
endmodule
"""

RIPPLE_2 = """
module rca2(input [1:0] a, input [1:0] b, input cin, output [1:0] s, output cout);
  wire [2:0] c;
  assign c[0] = cin;
  assign c[1] = (a[0] & b[0]) | (c[0] & (a[0] ^ b[0]));
  assign c[2] = (a[1] & b[1]) | (c[1] & (a[1] ^ b[1]));
  assign s = a ^ b ^ c[1:0];
  assign cout = c[2];
endmodule
"""


def exhaustive_inputs(module):
    """Every input combination as (list of dicts, dict of columns)."""
    names = [p.name for p in module.inputs]
    ranges = [range(1 << p.width) for p in module.inputs]
    rows = [dict(zip(names, combo)) for combo in product(*ranges)]
    columns = {name: [row[name] for row in rows] for name in names}
    return rows, columns


class RandomModules:
    """Random modules inside the supported subset, at most 10 input bits."""

    BINARY = ('&', '|', '^', '+', '-', '*', '<<', '>>', '==', '!=', '<', '<=', '>', '>=')

    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)

    def pick(self, items):
        return items[int(self.rng.integers(len(items)))]

    def leaf(self, ports):
        name, width = self.pick(ports)
        choice = int(self.rng.integers(4))
        if choice == 0:
            size = int(self.rng.integers(1, 5))
            return f"{size}'d{int(self.rng.integers(1 << size))}"
        if choice == 1 and width > 1:
            msb = int(self.rng.integers(width))
            lsb = int(self.rng.integers(msb + 1))
            return f"{name}[{msb}:{lsb}]"
        return name

    def expr(self, ports, depth):
        if depth == 0:
            return self.leaf(ports)
        kind = int(self.rng.integers(10))
        if kind == 0:
            return f"~{self.expr(ports, depth - 1)}"
        if kind == 1:
            return f"({self.expr(ports, depth - 1)} ? {self.expr(ports, depth - 1)} : {self.expr(ports, depth - 1)})"
        if kind == 2:
            return f"{{{self.expr(ports, depth - 1)}, {self.leaf(ports)}}}"
        op = self.pick(self.BINARY)
        right = self.leaf(ports) if op in ('<<', '>>') else self.expr(ports, depth - 1)
        return f"({self.expr(ports, depth - 1)} {op} {right})"

    def module(self, index):
        count = int(self.rng.integers(1, 4))
        widths = []
        remaining = 10
        for _ in range(count):
            width = int(self.rng.integers(1, min(4, remaining - (count - len(widths) - 1)) + 1))
            widths.append(width)
            remaining -= width
        inputs = [(f"i{n}", w) for n, w in enumerate(widths)]

        def decl(direction, name, width):
            return f"{direction} [{width - 1}:0] {name}" if width > 1 else f"{direction} {name}"

        t_width = int(self.rng.integers(1, 6))
        c_width = int(self.rng.integers(1, 4))
        y_width = int(self.rng.integers(1, 7))
        ports = ', '.join([decl('input', n, w) for n, w in inputs] + [decl('output', 'y', y_width)])
        # each bit of c is its own assign and may read the bits below it
        chain = [f"  assign c[{bit}] = {self.expr(inputs + [(f'c[{j}]', 1) for j in range(bit)], 1)};" for bit in range(c_width)]
        # d[1] reads d[0] inside the assign that drives both
        low = f"({self.expr(inputs, 1)} != {self.leaf(inputs)})"
        high = self.expr(inputs + [('d[0]', 1)], 1)
        body = [
            f"  wire [{t_width - 1}:0] t = {self.expr(inputs, 2)};",
            f"  wire [{c_width - 1}:0] c;",
            "  wire [1:0] d;",
            *[chain[i] for i in self.rng.permutation(c_width)],
            f"  assign d = {{{high}, {low}}};",
            f"  assign y = {self.expr(inputs + [('t', t_width), ('c', c_width), ('d', 2)], 2)};",
        ]
        return f"module r{index}({ports});\n" + '\n'.join(body) + "\nendmodule\n"


class ParserTestCase(SimpleTestCase):
    """Test cases for the mini-Verilog frontend"""

    def test_and_module(self):
        """Test a single-assign module parses with its ports"""
        module = parse_mini(AND_GATE)
        self.assertEqual(module.name, 'and2')
        self.assertEqual(len(module.assigns), 1)
        self.assertEqual([p.name for p in module.inputs], ['a', 'b'])
        self.assertEqual([p.name for p in module.outputs], ['y'])

    def test_dangling_operator(self):
        """Test a dangling operator is reported with its position"""
        with self.assertRaises(VerilogSyntaxError) as cm:
            parse_mini("module m(input a, output y); assign y = a +; endmodule")
        self.assertIsNotNone(cm.exception.line)
        self.assertIsNotNone(cm.exception.column)

    def test_sequential_logic_rejected(self):
        """Test always blocks fall outside the subset"""
        with self.assertRaises(VerilogSyntaxError):
            parse_mini("module m(input a, output y); always @(posedge clk) y <= a; endmodule")

    def test_unterminated_header(self):
        """Test a truncated module header"""
        with self.assertRaises(VerilogSyntaxError):
            parse_mini("module m(")

    def test_sized_literals_and_ranges(self):
        """Test sized literals and vector ranges"""
        module = parse_mini(
            "module m(input [3:0] a, output [3:0] y); assign y = a ^ 4'b1010 ^ 4'hF; endmodule"
        )
        self.assertEqual(module.inputs[0].width, 4)
        self.assertEqual(evaluate_module(module, {'a': 0b0011}), {'y': 0b0011 ^ 0b1010 ^ 0xF})


class ElaborationTestCase(SimpleTestCase):
    """Test cases for gate-level lowering"""

    def test_and_gate_is_one_gate(self):
        """Test a 1-bit AND maps to one AND2"""
        netlist = elaborate(parse_mini(AND_GATE))
        self.assertEqual(len(netlist.gates), 1)
        self.assertEqual(netlist.gates[0].kind, AND2)

    def test_shared_full_adder(self):
        """Test the shared full adder needs 2 XOR, 2 AND and 1 OR"""
        netlist = elaborate(parse_mini(FULL_ADDER_5))
        self.assertEqual(len(netlist.gates), 5)
        self.assertEqual(dict(netlist.gate_counts()), {XOR2: 2, AND2: 2, OR2: 1})

    def test_unshared_full_adder(self):
        """Test the majority-form full adder needs 7 gates"""
        netlist = elaborate(parse_mini(FULL_ADDER_7))
        self.assertEqual(dict(netlist.gate_counts()), {XOR2: 2, AND2: 3, OR2: 2})

    def test_eight_bit_adder_with_carry_in(self):
        """Test a + b + cin chains eight full adders"""
        netlist = elaborate(parse_mini(ADDER_8))
        self.assertEqual(len(netlist.gates), 40)

    def test_two_step_adder_is_larger(self):
        """Test splitting the carry-in into a second adder costs gates"""
        fused = elaborate(parse_mini(ADDER_8))
        split = elaborate(parse_mini(ADDER_8_TWO_STEP))
        self.assertGreater(len(split.gates), len(fused.gates))

    def test_pass_through_has_no_gates(self):
        """Test a plain wire elaborates to nothing"""
        netlist = elaborate(parse_mini("module w(input a, output y); assign y = a; endmodule"))
        self.assertEqual(netlist.gates, ())

    def test_deterministic(self):
        """Test identical source gives identical netlists"""
        self.assertEqual(elaborate(parse_mini(ADDER_8)), elaborate(parse_mini(ADDER_8)))

    def test_topological_order(self):
        """Test every fanin is driven before it is read"""
        netlist = elaborate(parse_mini(ADDER_8_TWO_STEP))
        driven = {0, 1, *netlist.inputs}
        for gate in netlist.gates:
            self.assertTrue(set(gate.fanins) <= driven)
            driven.add(gate.output)


class OracleEquivalenceTestCase(SimpleTestCase):
    """Test cases comparing netlist simulation with direct evaluation"""

    def assert_equivalent(self, source):
        module = parse_mini(source)
        netlist = elaborate(module)
        rows, columns = exhaustive_inputs(module)
        simulated = netlist.simulate(columns)
        for index, row in enumerate(rows):
            expected = evaluate_module(module, row)
            got = {name: simulated[name][index] for name in expected}
            self.assertEqual(got, expected, f"{source}\ninputs {row}")

    def test_fixed_designs(self):
        """Test the hand-written designs"""
        for source in (AND_GATE, FULL_ADDER_5, FULL_ADDER_7):
            self.assert_equivalent(source)

    def test_random_modules(self):
        """Test 200 random subset modules on every input vector"""
        generator = RandomModules(seed=2024)
        for index in range(200):
            self.assert_equivalent(generator.module(index))


class BitLevelLoopTestCase(SimpleTestCase):
    """Test cases for loop detection on individual bits"""

    def assert_loop(self, body):
        with self.assertRaisesMessage(VerilogSyntaxError, 'combinational loop'):
            parse_mini(f"module m(input a, output [1:0] y); {body} endmodule")

    def test_ripple_adder(self):
        """Test a carry chain through one vector matches a + b + cin"""
        module = parse_mini(RIPPLE_2)
        netlist = elaborate(module)
        rows, columns = exhaustive_inputs(module)
        simulated = netlist.simulate(columns)
        for index, row in enumerate(rows):
            total = row['a'] + row['b'] + row['cin']
            expected = {'s': total & 0b11, 'cout': total >> 2}
            self.assertEqual(evaluate_module(module, row), expected, row)
            self.assertEqual({name: simulated[name][index] for name in expected}, expected, row)

    def test_bit_reads_lower_bit(self):
        """Test y[1] may read y[0]"""
        module = parse_mini("module m(input a, output [1:0] y); assign y[0] = a; assign y[1] = ~y[0]; endmodule")
        self.assertEqual(evaluate_module(module, {'a': 0}), {'y': 0b10})
        self.assertEqual(evaluate_module(module, {'a': 1}), {'y': 0b01})
        self.assertEqual(len(elaborate(module).gates), 1)

    def test_one_assign_reads_its_own_bit(self):
        """Test a single assign may feed one of its bits into another"""
        module = parse_mini("module m(input a, output [1:0] y); assign y = {~y[0], a}; endmodule")
        self.assertEqual(evaluate_module(module, {'a': 1}), {'y': 0b01})
        self.assertEqual(evaluate_module(module, {'a': 0}), {'y': 0b10})
        self.assertEqual(elaborate(module).simulate({'a': [0, 1]})['y'], [0b10, 0b01])

    def test_real_loops(self):
        """Test bit-level cycles are still rejected"""
        self.assert_loop("assign y[0] = y[1]; assign y[1] = y[0];")
        self.assert_loop("assign y = {y[0], y[1]};")
        self.assert_loop("assign y = y + {1'b0, a};")
        self.assert_loop("assign y[0] = a & y[0]; assign y[1] = a;")

    def test_loop_names_the_signal(self):
        """Test the loop error lists the signals on it"""
        with self.assertRaisesMessage(VerilogSyntaxError, 'combinational loop through t, y'):
            parse_mini("module m(input a, output y); wire t; assign t = y & a; assign y = t; endmodule")


class PpaEstimateTestCase(SimpleTestCase):
    """Test cases for the unit-cost PPA model"""

    def test_and_gate(self):
        """Test one AND2 gate"""
        ppa = estimate_ppa(elaborate(parse_mini(AND_GATE)))
        self.assertAlmostEqual(ppa.delay, 0.01)
        self.assertAlmostEqual(ppa.area, 1.0)
        self.assertAlmostEqual(ppa.power, 0.01)

    def test_full_adder_comparison(self):
        """Test the 5-gate full adder beats the 7-gate variant"""
        five = estimate_ppa(elaborate(parse_mini(FULL_ADDER_5)))
        seven = estimate_ppa(elaborate(parse_mini(FULL_ADDER_7)))
        self.assertAlmostEqual(five.area, 7.0)
        self.assertAlmostEqual(seven.area, 9.0)
        self.assertAlmostEqual(five.delay, 0.04)

        def score(m):
            return 1.0 / (m.delay * m.area * m.power)

        self.assertGreater(score(five), score(seven))

    def test_pass_through_floors(self):
        """Test the empty netlist is floored"""
        ppa = estimate_ppa(elaborate(parse_mini("module w(input a, output y); assign y = a; endmodule")))
        self.assertEqual(ppa, PpaMetrics(0.01, 0.1, 0.001))

    def test_adding_a_gate_never_shrinks_area(self):
        """Test area and power are monotone in the gate set"""
        netlist = elaborate(parse_mini(FULL_ADDER_5))
        extra = Gate(AND2, tuple(sorted(netlist.inputs[:2])), netlist.size)
        bigger = replace(netlist, gates=netlist.gates + (extra,))
        before, after = estimate_ppa(netlist), estimate_ppa(bigger)
        self.assertGreater(after.area, before.area)
        self.assertGreater(after.power, before.power)

    def test_delay_is_longest_weighted_path(self):
        """Test delay against a memoised backward longest-path search"""
        model = CostModel()
        netlist = elaborate(parse_mini(ADDER_8))
        drivers = {gate.output: gate for gate in netlist.gates}
        memo = {}

        def depth(bit):
            if bit not in drivers:
                return 0
            if bit not in memo:
                gate = drivers[bit]
                memo[bit] = model.levels(gate.kind) + max(depth(f) for f in gate.fanins)
            return memo[bit]

        levels = max(depth(bit) for bit in netlist.outputs)
        self.assertEqual(longest_path_levels(netlist, model), levels)
        self.assertAlmostEqual(estimate_ppa(netlist, model).delay, levels * model.delay_per_level)

    def test_cost_model_rejects_non_positive(self):
        """Test cost constants must be positive"""
        with self.assertRaises(ValueError):
            CostModel(area_and2=0)


class VectorSimulationTestCase(SimpleTestCase):
    """Test cases for vector tables and their simulation"""

    AND_TABLE = "ports: in a b -> out y\n" + "".join(
        f"a={a} b={b} -> y={a & b}\n" for a in (0, 1) for b in (0, 1)
    )

    def test_and_table_passes(self):
        """Test a correct AND table"""
        result = simulate_vectors(parse_mini(AND_GATE), VectorTable.parse(self.AND_TABLE))
        self.assertTrue(result.passed)
        self.assertEqual(len(result.rows), 4)

    def test_wrong_row_fails(self):
        """Test one wrong expectation fails the run"""
        table = VectorTable.parse("ports: in a b -> out y\na=1 b=1 -> y=1\na=1 b=0 -> y=1\n")
        result = simulate_vectors(parse_mini(AND_GATE), table)
        self.assertFalse(result.passed)
        self.assertEqual(len(result.failures), 1)
        self.assertIn('MISMATCH', result.describe())

    def test_adder_wraparound(self):
        """Test the 8-bit adder against integer sums"""
        module = parse_mini(ADDER_8)
        cases = [(0, 0, 0), (255, 1, 0), (255, 255, 1), (0x0F, 0x01, 0), (100, 27, 1), (200, 100, 0)]
        lines = ["ports: in a[8] b[8] cin -> out s[8] cout[1]"]
        for a, b, cin in cases:
            total = a + b + cin
            lines.append(f"a={a:#x} b={b:#x} cin={cin} -> s={total & 0xFF:#x} cout={total >> 8}")
        result = simulate_vectors(module, VectorTable.parse('\n'.join(lines)))
        self.assertTrue(result.passed, result.describe())

    def test_header_mismatch(self):
        """Test a header naming unknown ports"""
        table = VectorTable.parse("ports: in a c -> out y\na=1 c=1 -> y=1\n")
        with self.assertRaises(PortMismatch):
            simulate_vectors(parse_mini(AND_GATE), table)

    def test_malformed_tables(self):
        """Test malformed table text"""
        for text in ("a=1 -> y=1\n", "ports: in a -> out y\na=2 -> y=0\n", "ports: in a -> out y\na=1 y=1\n"):
            with self.assertRaises(VectorTableError):
                VectorTable.parse(text)

    def test_to_text_reparses(self):
        """Test rendered tables parse back to the same table"""
        table = VectorTable.parse("ports: in a[4] b -> out y[4]\na=0xA b=1 -> y=0x5  # comment\n")
        self.assertEqual(VectorTable.parse(table.to_text()), table)

    def test_rendered_verilog_testbench(self):
        """Test the self-checking Verilog testbench has one check per row"""
        text = render_verilog_testbench(VectorTable.parse(self.AND_TABLE), 'and2')
        self.assertIn('and2', text)
        self.assertEqual(text.count('if ('), 4)
        self.assertIn('MISMATCH', text)
        self.assertIn('PASS', text)
