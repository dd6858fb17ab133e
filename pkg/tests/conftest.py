import pytest

from chcfold import fixtures
from chcfold.syntax import parse_program


@pytest.fixture(scope="session")
def corpus():
    return {p: {k: fixtures.read(f"{p}.{k}") for k in fixtures.KINDS} for p in fixtures.PROBLEMS}


def program(text: str):
    return parse_program(text)


def first(p, pred):
    """First clause with the given head predicate (None for goals)."""
    for c in p.clauses:
        if (c.head.pred if c.head is not None else None) == pred:
            return c
    raise LookupError(pred)


# ---------------------------------------------------------------------------
# acceptance report: one PASS/FAIL line per criterion at the end of the run

ACCEPTANCE: dict[int, dict] = {}


def report(criterion: int, title: str, label: str, ok: bool, expected_red: bool = False) -> bool:
    entry = ACCEPTANCE.setdefault(criterion, {"title": title, "checks": []})
    entry["checks"].append((label, ok, expected_red))
    return ok


def acceptance_lines() -> list[str]:
    lines = []
    for n in sorted(ACCEPTANCE):
        e = ACCEPTANCE[n]
        checks = e["checks"]
        bad = [(label, red) for label, ok, red in checks if not ok]
        verdict = "PASS" if not bad else "FAIL"
        detail = f"{len(checks) - len(bad)}/{len(checks)} checks"
        if bad:
            detail += "; red: " + ", ".join(label + (" (known, xfail)" if red else "")
                                            for label, red in bad)
        lines.append(f"criterion {n} {e['title']}: {verdict} ({detail})")
    return lines


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines():
            terminalreporter.write_line(line)
