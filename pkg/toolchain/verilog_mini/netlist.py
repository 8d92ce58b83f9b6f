"""Gate-level netlist of 2-input gates and its vectorised simulator."""

from collections import Counter
from dataclasses import dataclass
from typing import Tuple

import numpy as np

NOT = 'NOT'
AND2 = 'AND2'
OR2 = 'OR2'
XOR2 = 'XOR2'
GATE_KINDS = (NOT, AND2, OR2, XOR2)

# Bit ids 0 and 1 are the constant nets.
CONST0 = 0
CONST1 = 1


@dataclass(frozen=True)
class Gate:
    kind: str
    fanins: Tuple[int, ...]
    output: int


@dataclass(frozen=True)
class GateNetlist:
    """
    Acyclic netlist. `gates` is stored in topological order, so a gate's
    position is its topological index; every fanin is a constant, an input
    bit or the output of an earlier gate.
    """
    input_ports: Tuple[Tuple[str, int], ...]
    output_ports: Tuple[Tuple[str, int], ...]
    inputs: Tuple[int, ...]
    outputs: Tuple[int, ...]
    gates: Tuple[Gate, ...]

    @property
    def size(self):
        ids = [CONST1, *self.inputs, *self.outputs, *(g.output for g in self.gates)]
        return max(ids) + 1

    def gate_counts(self):
        return Counter(g.kind for g in self.gates)

    def topological_index(self):
        return {gate.output: index for index, gate in enumerate(self.gates)}

    def _port_bits(self, ports, bits):
        offset = 0
        for name, width in ports:
            yield name, bits[offset:offset + width]
            offset += width

    def simulate(self, vectors):
        """
        Evaluate the netlist on a batch of input assignments.

        `vectors` maps every input port name to a sequence of integers (one per
        vector); the result maps every output port name to a list of integers.
        """
        count = len(next(iter(vectors.values()))) if vectors else 1
        values = np.zeros((self.size, count), dtype=bool)
        values[CONST1] = True
        for name, ids in self._port_bits(self.input_ports, self.inputs):
            column = list(vectors[name])
            for bit, net in enumerate(ids):
                values[net] = np.fromiter(((v >> bit) & 1 for v in column), dtype=bool, count=count)

        for gate in self.gates:
            a = values[gate.fanins[0]]
            if gate.kind == NOT:
                values[gate.output] = ~a
            elif gate.kind == AND2:
                values[gate.output] = a & values[gate.fanins[1]]
            elif gate.kind == OR2:
                values[gate.output] = a | values[gate.fanins[1]]
            else:
                values[gate.output] = a ^ values[gate.fanins[1]]

        results = {}
        for name, ids in self._port_bits(self.output_ports, self.outputs):
            words = [0] * count
            for bit, net in enumerate(ids):
                for column in np.flatnonzero(values[net]):
                    words[column] |= 1 << bit
            results[name] = words
        return results
