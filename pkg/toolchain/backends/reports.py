"""Extraction of delay / area / power from synthesis and physical-flow reports."""

import re

from ..exceptions import ReportParseError
from ..verilog_mini import PpaMetrics


def _first_value(pattern, text):
    for match in re.finditer(pattern, text, re.MULTILINE):
        groups = [g for g in match.groups() if g is not None] if match.groups() else [match.group(0)]
        if groups:
            try:
                return float(groups[0])
            except ValueError:
                continue
    return None


def parse_ppa_report(text, patterns):
    """
    Pull the three metrics out of report text.

    `patterns` maps delay_ns / area_um2 / power_w to a regex; the first
    non-empty capture group of the first parsable match wins. Missing or
    non-positive metrics raise ReportParseError.
    """
    values = {}
    for key in ('delay_ns', 'area_um2', 'power_w'):
        value = _first_value(patterns[key], text)
        if value is None:
            raise ReportParseError(f"no {key} found in report")
        if value <= 0:
            raise ReportParseError(f"{key} = {value:g} is not positive")
        values[key] = value
    return PpaMetrics.from_record(values)
