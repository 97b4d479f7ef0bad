"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

RESULTS: dict[int, str] = {}


def record(number: int, title: str, passed: bool, detail: str = "") -> str:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    RESULTS[number] = line
    print(line)
    return line
