"""Unit-cost area/delay/power model over a GateNetlist."""

from dataclasses import asdict, dataclass

from .netlist import NOT, AND2, OR2, XOR2


@dataclass(frozen=True)
class PpaMetrics:
    delay: float  # ns
    area: float  # um^2
    power: float  # W

    def as_record(self):
        return {'delay_ns': self.delay, 'area_um2': self.area, 'power_w': self.power}

    @classmethod
    def from_record(cls, record):
        return cls(
            delay=float(record['delay_ns']),
            area=float(record['area_um2']),
            power=float(record['power_w']),
        )

    def is_positive(self):
        return self.delay > 0 and self.area > 0 and self.power > 0


@dataclass(frozen=True)
class CostModel:
    area_not: float = 0.5
    area_and2: float = 1.0
    area_or2: float = 1.0
    area_xor2: float = 2.0
    levels_xor2: int = 2
    levels_other: int = 1
    delay_per_level: float = 0.01
    power_per_area: float = 0.01
    floor_area: float = 0.1
    floor_delay: float = 0.01
    floor_power: float = 0.001

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value <= 0:
                raise ValueError(f"cost model {name} must be positive, got {value}")

    def area(self, kind):
        return {NOT: self.area_not, AND2: self.area_and2, OR2: self.area_or2, XOR2: self.area_xor2}[kind]

    def levels(self, kind):
        return self.levels_xor2 if kind == XOR2 else self.levels_other


def longest_path_levels(netlist, cost_model):
    """Level-weighted arrival of the latest output; inputs and constants arrive at 0."""
    arrival = {}
    for gate in netlist.gates:
        start = max((arrival.get(f, 0) for f in gate.fanins), default=0)
        arrival[gate.output] = start + cost_model.levels(gate.kind)
    return max((arrival.get(bit, 0) for bit in netlist.outputs), default=0)


def estimate_ppa(netlist, cost_model=None):
    cost_model = cost_model or CostModel()
    area = sum(cost_model.area(gate.kind) for gate in netlist.gates)
    delay = longest_path_levels(netlist, cost_model) * cost_model.delay_per_level
    power = area * cost_model.power_per_area
    return PpaMetrics(
        delay=max(delay, cost_model.floor_delay),
        area=max(area, cost_model.floor_area),
        power=max(power, cost_model.floor_power),
    )
