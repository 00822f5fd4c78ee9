import re


def _criterion(line):
    m = re.search(r"criterion (\d+)", line)
    return int(m.group(1)) if m else 0


def pytest_terminal_summary(terminalreporter):
    """Echo the one-line verdict each acceptance test attaches to its report."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", None) != "call":
                continue
            lines += [v for k, v in rep.user_properties if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion):
            terminalreporter.write_line(line)
