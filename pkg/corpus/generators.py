"""
Text generators used by the dataset pipeline.

A generator answers a Prompt with text: an instruction for raw code, a
reasoning chain for cold-start data, or a testbench. Three implementations:
scripted lookups, an offline heuristic, and an OpenAI-compatible client.
"""

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import requests

from toolchain.exceptions import ToolchainError
from toolchain.verilog_mini import VectorTable, evaluate_module, parse_mini
from toolchain.verilog_mini.vectors import VectorRow

from .exceptions import GeneratorUnavailable

logger = logging.getLogger(__name__)

INSTRUCTION = 'instruction'
REASONING = 'reasoning'
TESTBENCH = 'testbench'
PURPOSES = (INSTRUCTION, REASONING, TESTBENCH)

HEURISTIC = 'heuristic'
SCRIPTED = 'scripted'
EXTERNAL = 'external'


@dataclass(frozen=True)
class Prompt:
    purpose: str
    record_id: str
    text: str
    code: str = ''
    attempt: int = 1


@dataclass(frozen=True)
class GeneratorSettings:
    kind: str = HEURISTIC
    script: Optional[str] = None
    url: Optional[str] = None
    model: str = 'deepseek-reasoner'
    key_env: str = 'CHIPFORGE_GENERATOR_API_KEY'
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 1.0
    min_cases: int = 3
    max_cases: int = 20

    def __post_init__(self):
        if self.kind not in (HEURISTIC, SCRIPTED, EXTERNAL):
            raise ValueError(f"unknown generator '{self.kind}'")
        if self.kind == SCRIPTED and not self.script:
            raise ValueError("the scripted generator needs CHIPFORGE_GENERATOR_SCRIPT")
        if self.kind == EXTERNAL and not self.url:
            raise ValueError("the external generator needs CHIPFORGE_GENERATOR_URL")
        if self.retries < 1 or self.timeout <= 0 or self.backoff < 0:
            raise ValueError("generator retries must be >= 1, timeout > 0 and backoff >= 0")
        if not 1 <= self.min_cases <= self.max_cases:
            raise ValueError("testbench case bounds must satisfy 1 <= min <= max")


class TextGenerator:
    name = None

    def generate(self, prompt):
        raise NotImplementedError


class ScriptedGenerator(TextGenerator):
    """
    Deterministic lookup. Keys are tried in order: "purpose:record_id",
    then "purpose", then "default".
    """
    name = SCRIPTED

    def __init__(self, responses):
        self.responses = dict(responses)

    @classmethod
    def from_file(cls, path):
        with Path(path).open() as handle:
            return cls(json.load(handle))

    def generate(self, prompt):
        for key in (f"{prompt.purpose}:{prompt.record_id}", prompt.purpose, 'default'):
            if key in self.responses:
                return self.responses[key]
        raise GeneratorUnavailable(f"no scripted response for {prompt.purpose}:{prompt.record_id}")


def _seed(record_id):
    return int(hashlib.sha256(record_id.encode('utf-8')).hexdigest()[:8], 16)


class HeuristicGenerator(TextGenerator):
    """Offline generator that reads the code itself. Same prompt, same text."""
    name = HEURISTIC

    def __init__(self, min_cases=3, max_cases=20):
        self.min_cases = min_cases
        self.max_cases = max_cases

    def generate(self, prompt):
        try:
            module = parse_mini(prompt.code)
        except ToolchainError:
            logger.info(f"heuristic generator cannot read {prompt.record_id}; returning no text")
            return ''
        if prompt.purpose == INSTRUCTION:
            return self._instruction(module)
        if prompt.purpose == REASONING:
            return self._reasoning(module)
        return self._testbench(module, prompt.record_id).to_text()

    @staticmethod
    def _ports(ports):
        return ', '.join(f"{p.name}[{p.width}]" if p.width > 1 else p.name for p in ports)

    def _instruction(self, module):
        return (
            f"Write a combinational Verilog module named {module.name} with inputs "
            f"{self._ports(module.inputs)} and outputs {self._ports(module.outputs)}."
        )

    def _reasoning(self, module):
        lines = [
            f"The module {module.name} is purely combinational: inputs {self._ports(module.inputs)}, "
            f"outputs {self._ports(module.outputs)}.",
        ]
        for assign in module.assigns:
            targets = ', '.join(t.name for t in assign.targets)
            lines.append(f"Drive {targets} with one continuous assignment.")
        lines.append("Keep the expressions flat so synthesis maps them onto few gates.")
        return '\n'.join(lines)

    def _testbench(self, module, record_id):
        rng = np.random.default_rng(_seed(record_id))
        space_bits = module.input_bits
        if space_bits <= 3 and self.min_cases <= (1 << space_bits) <= self.max_cases:
            stimuli = [self._split(module, combo) for combo in range(1 << space_bits)]
        else:
            count = max(self.min_cases, min(8, self.max_cases))
            stimuli = [self._random(module, rng) for _ in range(count)]
        rows = tuple(VectorRow(inputs, evaluate_module(module, inputs)) for inputs in stimuli)
        return VectorTable(
            inputs=tuple((p.name, p.width) for p in module.inputs),
            outputs=tuple((p.name, p.width) for p in module.outputs),
            rows=rows,
        )

    @staticmethod
    def _split(module, combo):
        inputs, offset = {}, 0
        for port in module.inputs:
            inputs[port.name] = (combo >> offset) & ((1 << port.width) - 1)
            offset += port.width
        return inputs

    @staticmethod
    def _random(module, rng):
        return {
            port.name: int.from_bytes(rng.bytes((port.width + 7) // 8), 'little') & ((1 << port.width) - 1)
            for port in module.inputs
        }


_SYSTEM_PROMPTS = {
    INSTRUCTION: "Describe what the given Verilog module does as a one-paragraph design instruction.",
    REASONING: "Explain step by step how to design the given Verilog module. Do not repeat the code.",
    TESTBENCH: (
        "Write a test vector table for the given Verilog module with between {low} and {high} rows. "
        "First line: 'ports: in <name>[<width>] ... -> out <name>[<width>] ...'. "
        "Each row: '<in>=<value> ... -> <out>=<value> ...'. Output only the table."
    ),
}


class ExternalGenerator(TextGenerator):
    """OpenAI-compatible chat-completions client with bounded retries."""
    name = EXTERNAL

    def __init__(self, settings, session=None):
        self.settings = settings
        self.session = session or requests.Session()

    def _headers(self):
        headers = {'Content-Type': 'application/json'}
        key = os.environ.get(self.settings.key_env)
        if key:
            headers['Authorization'] = f"Bearer {key}"
        return headers

    def _payload(self, prompt):
        system = _SYSTEM_PROMPTS[prompt.purpose].format(low=self.settings.min_cases, high=self.settings.max_cases)
        user = prompt.text if not prompt.code else f"{prompt.text}\n\n```verilog\n{prompt.code}\n```"
        return {
            'model': self.settings.model,
            'messages': [{'role': 'system', 'content': system}, {'role': 'user', 'content': user}],
        }

    def generate(self, prompt):
        last_error = None
        for attempt in range(self.settings.retries):
            try:
                response = self.session.post(
                    self.settings.url,
                    json=self._payload(prompt),
                    headers=self._headers(),
                    timeout=self.settings.timeout,
                )
                response.raise_for_status()
                return response.json()['choices'][0]['message']['content']
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                logger.warning(f"generator request {attempt + 1}/{self.settings.retries} failed: {exc}")
                if attempt + 1 < self.settings.retries:
                    time.sleep(self.settings.backoff * (2 ** attempt))
        raise GeneratorUnavailable(f"generator at {self.settings.url} unavailable: {last_error}")


def get_generator(settings):
    if settings.kind == SCRIPTED:
        return ScriptedGenerator.from_file(settings.script)
    if settings.kind == EXTERNAL:
        return ExternalGenerator(settings)
    return HeuristicGenerator(settings.min_cases, settings.max_cases)
