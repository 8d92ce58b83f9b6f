"""Combinational mini-Verilog frontend, gate lowering, simulation and cost model."""

from .elaborate import elaborate
from .evaluate import evaluate_module
from .netlist import GateNetlist
from .nodes import MiniModule
from .parser import parse_mini
from .ppa import CostModel, PpaMetrics, estimate_ppa
from .vectors import FunctionalResult, VectorTable, render_verilog_testbench, simulate_vectors

__all__ = [
    'CostModel',
    'FunctionalResult',
    'GateNetlist',
    'MiniModule',
    'PpaMetrics',
    'VectorTable',
    'elaborate',
    'estimate_ppa',
    'evaluate_module',
    'parse_mini',
    'render_verilog_testbench',
    'simulate_vectors',
]
