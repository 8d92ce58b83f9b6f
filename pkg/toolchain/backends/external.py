"""
Adapters for Icarus Verilog, Yosys and an optional OpenROAD flow script.

Commands are configurable templates; `{files}` expands to the source list.
"""

import logging
import re
import shlex
import shutil
from pathlib import Path

from ..exceptions import ReportParseError, ToolUnavailable
from ..sandbox import run_command
from ..stages import EXTERNAL, VECTOR_TABLE
from ..verilog_mini import render_verilog_testbench
from .base import Backend, StageOutcome
from .reports import parse_ppa_report

logger = logging.getLogger(__name__)

_MODULE_NAME = re.compile(r'\bmodule\s+([A-Za-z_][A-Za-z0-9_$]*)')


def top_module(code):
    match = _MODULE_NAME.search(code)
    return match.group(1) if match else 'top'


def scan_markers(output, markers):
    """First output line containing a failure marker, or None."""
    for line in output.splitlines():
        if any(marker in line for marker in markers):
            return line.strip()
    return None


def yosys_script(top, liberty=None, netlist_out='synth.v'):
    lines = ['read_verilog design.v', f'synth -top {top}']
    if liberty:
        lines += [f'dfflibmap -liberty {liberty}', f'abc -liberty {liberty}', 'opt_clean']
        lines.append(f'tee -o stat.txt stat -liberty {liberty}')
    else:
        lines.append('tee -o stat.txt stat')
    lines.append(f'write_verilog -noattr {netlist_out}')
    return '\n'.join(lines) + '\n'


class ExternalBackend(Backend):
    name = EXTERNAL
    enforces_timeouts = True

    def __init__(self, settings):
        self.settings = settings

    def _tool(self, name):
        configured = getattr(self.settings.tools, name)
        path = shutil.which(configured)
        if path is None:
            raise ToolUnavailable(configured)
        return path

    def _command(self, template, **values):
        args = []
        for token in shlex.split(template):
            if token == '{files}':
                args.extend(str(f) for f in values['files'])
            else:
                args.append(token.format(**values))
        return args

    def _iverilog(self, workspace, files, timeout):
        out = workspace.path / 'sim.vvp'
        args = self._command(
            self.settings.commands.compile, iverilog=self._tool('iverilog'), out=out, files=files,
        )
        return run_command(args, workspace.path, 'compile', timeout), out

    def compile(self, code, workspace, timeout):
        design = workspace.write('design.v', code)
        result, _ = self._iverilog(workspace, [design], timeout)
        return StageOutcome(result.returncode == 0, result.output)

    def simulate(self, code, testbench, workspace, timeout):
        design = workspace.write('design.v', code)
        body = testbench.body
        if testbench.kind == VECTOR_TABLE:
            body = render_verilog_testbench(testbench.table, top_module(code))
        bench = workspace.write('testbench.v', body)

        vvp = self._tool('vvp')
        built, out = self._iverilog(workspace, [design, bench], timeout)
        if built.returncode != 0:
            return StageOutcome(False, f"testbench compilation failed:\n{built.output}")

        args = self._command(self.settings.commands.simulate, vvp=vvp, out=out)
        result = run_command(args, workspace.path, 'simulate', timeout)
        marker = scan_markers(result.output, self.settings.failure_markers)
        if result.returncode != 0:
            return StageOutcome(False, f"simulator exited with {result.returncode}\n{result.output}")
        if marker is not None:
            return StageOutcome(False, f"failure marker in output: {marker}\n{result.output}")
        return StageOutcome(True, result.output)

    def synthesize(self, code, workspace, timeout, measure_ppa=True):
        workspace.write('design.v', code)
        script = workspace.write('synth.ys', yosys_script(top_module(code), self.settings.liberty))
        args = self._command(self.settings.commands.synth, yosys=self._tool('yosys'), script=script)
        result = run_command(args, workspace.path, 'synthesis', timeout)
        if result.returncode != 0:
            return StageOutcome(False, f"yosys exited with {result.returncode}\n{result.output}")
        if not measure_ppa:
            return StageOutcome(True, result.output)

        stat = workspace.path / 'stat.txt'
        report = stat.read_text() if stat.exists() else result.output
        if self.settings.physical_script:
            try:
                physical = self._physical(workspace, timeout)
            except OSError as exc:
                logger.warning(f"physical flow script unreadable: {exc}")
                return StageOutcome(False, f"cannot read physical flow script {self.settings.physical_script}: {exc.strerror}")
            if physical.returncode != 0:
                return StageOutcome(False, f"physical flow exited with {physical.returncode}\n{physical.output}")
            report = f"{report}\n{physical.output}"
        try:
            ppa = parse_ppa_report(report, self.settings.patterns)
        except ReportParseError as exc:
            logger.warning(f"PPA extraction failed: {exc}")
            return StageOutcome(False, f"{exc}\n{report}")
        return StageOutcome(True, report, ppa)

    def _physical(self, workspace, timeout):
        source = Path(self.settings.physical_script)
        script = workspace.write(source.name, source.read_text())
        args = self._command(self.settings.commands.physical, openroad=self._tool('openroad'), script=script)
        return run_command(args, workspace.path, 'synthesis', timeout)
