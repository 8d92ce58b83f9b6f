"""
Built-in demo suite and task-suite files.

Every demo task offers four candidates: an efficient correct design, a
correct but larger one, one that does not compile and one that breaks the
response template. The reference PPA is the efficient design's own.
"""

import json
import logging
from pathlib import Path

from rest_framework.exceptions import ValidationError

from rewards.response_format import render_code_answer, render_response
from toolchain.stages import Testbench
from toolchain.verilog_mini import CostModel, VectorTable, elaborate, estimate_ppa, evaluate_module, parse_mini
from toolchain.verilog_mini.vectors import VectorRow

from .grpo import Task
from .serializers import TaskSerializer

logger = logging.getLogger(__name__)

EFFICIENT, INEFFICIENT, COMPILE_FAIL, FORMAT_FAIL = range(4)

_DEMO = [
    {
        'id': 'and2',
        'instruction': 'Implement a 2-input AND gate with inputs a, b and output y.',
        'header': 'module and2(input a, input b, output y);',
        'efficient': 'assign y = a & b;',
        'inefficient': 'assign y = ~(~a | ~b);',
        'broken': 'assign y = a &;',
        'vectors': [{'a': a, 'b': b} for a in (0, 1) for b in (0, 1)],
    },
    {
        'id': 'adder8',
        'instruction': 'Implement an 8-bit adder with carry in (cin) and carry out (cout).',
        'header': 'module adder8(input [7:0] a, input [7:0] b, input cin, output [7:0] s, output cout);',
        'efficient': 'assign {cout, s} = a + b + cin;',
        'inefficient': 'wire [8:0] t = a + b;\n  assign {cout, s} = t + cin;',
        'broken': 'assign {cout, s} = a + b + ;',
        'vectors': [
            {'a': 0, 'b': 0, 'cin': 0},
            {'a': 255, 'b': 1, 'cin': 0},
            {'a': 15, 'b': 1, 'cin': 0},
            {'a': 200, 'b': 100, 'cin': 1},
            {'a': 127, 'b': 128, 'cin': 1},
            {'a': 1, 'b': 1, 'cin': 1},
        ],
    },
    {
        'id': 'mux4',
        'instruction': 'Implement a 4-bit 2:1 multiplexer: y = b when sel is 1, else a.',
        'header': 'module mux4(input sel, input [3:0] a, input [3:0] b, output [3:0] y);',
        'efficient': 'assign y = sel ? b : a;',
        'inefficient': 'assign y = sel ? b : (sel ? b : a);',
        'broken': 'assign y = sel ? b a;',
        'vectors': [
            {'sel': 0, 'a': 3, 'b': 12},
            {'sel': 1, 'a': 3, 'b': 12},
            {'sel': 0, 'a': 15, 'b': 0},
            {'sel': 1, 'a': 15, 'b': 0},
            {'sel': 1, 'a': 5, 'b': 10},
        ],
    },
    {
        'id': 'cmp4',
        'instruction': 'Implement a 4-bit equality comparator: eq is 1 when a equals b.',
        'header': 'module cmp4(input [3:0] a, input [3:0] b, output eq);',
        'efficient': 'assign eq = a == b;',
        'inefficient': "assign eq = (a - b) == 4'd0;",
        'broken': 'assign eq = a == ;',
        'vectors': [
            {'a': 3, 'b': 3},
            {'a': 3, 'b': 4},
            {'a': 0, 'b': 0},
            {'a': 15, 'b': 14},
            {'a': 9, 'b': 9},
            {'a': 8, 'b': 1},
        ],
    },
    {
        'id': 'inc4',
        'instruction': 'Implement a 4-bit incrementer: y = a + 1 modulo 16.',
        'header': 'module inc4(input [3:0] a, output [3:0] y);',
        'efficient': "assign y = a + 4'd1;",
        'inefficient': "assign y = a + 4'd2 - 4'd1;",
        'broken': "assign y = a + ;",
        'vectors': [{'a': a} for a in (0, 1, 7, 14, 15)],
    },
]


def _module(header, body):
    return f"{header}\n  {body}\nendmodule"


def vector_table_for(code, stimuli):
    """Vector table whose expected outputs come from evaluating `code` itself."""
    module = parse_mini(code)
    rows = tuple(VectorRow(dict(inputs), evaluate_module(module, inputs)) for inputs in stimuli)
    return VectorTable(
        inputs=tuple((p.name, p.width) for p in module.inputs),
        outputs=tuple((p.name, p.width) for p in module.outputs),
        rows=rows,
    )


def demo_suite(cost_model=None):
    tasks = []
    for design in _DEMO:
        efficient = _module(design['header'], design['efficient'])
        table = vector_table_for(efficient, design['vectors'])
        reference = estimate_ppa(elaborate(parse_mini(efficient)), cost_model or CostModel())
        reasoning = f"The {design['id']} module needs only continuous assignments; keep the logic minimal."
        candidates = (
            render_response(reasoning, render_code_answer(efficient)),
            render_response(reasoning, render_code_answer(_module(design['header'], design['inefficient']))),
            render_response(reasoning, render_code_answer(_module(design['header'], design['broken']))),
            render_code_answer(efficient),
        )
        tasks.append(Task(
            id=design['id'],
            instruction=design['instruction'],
            candidates=candidates,
            testbench=Testbench.from_text(table.to_text()),
            reference_ppa=reference,
        ))
    return tasks


def load_suite(path):
    """Tasks from a JSONL suite file; raises ValidationError on the first bad line."""
    tasks = []
    with Path(path).open() as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError({'line': number, 'detail': str(exc)}) from None
            serializer = TaskSerializer(data=data)
            if not serializer.is_valid():
                raise ValidationError({'line': number, 'errors': serializer.errors})
            tasks.append(serializer.save())
    logger.info(f"loaded {len(tasks)} tasks from {path}")
    return tasks


def write_suite(tasks, path):
    with Path(path).open('w') as handle:
        for task in tasks:
            handle.write(json.dumps(TaskSerializer(task).data, sort_keys=True) + '\n')
