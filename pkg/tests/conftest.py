from pathlib import Path

import pytest

from guarded_saturate.textio import format_rule, parse, parse_rule, parse_rules

SAMPLES = Path(__file__).resolve().parents[1] / "src" / "guarded_saturate" / "samples"


def R(text: str, skolem: bool = False):
    return parse_rule(text, allow_skolem=skolem)


def RS(text: str):
    return parse_rules(text)


def texts(rules) -> set:
    return {format_rule(r) for r in rules}


@pytest.fixture
def sample():
    def load(name: str):
        return parse((SAMPLES / f"{name}.gtgd").read_text())
    return load


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
