"""Shared pytest hooks."""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Replay the acceptance verdicts after the run, where fd-level capture
    # cannot swallow them. Only fires when the acceptance module ran.
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", ()) if module else ()
    if verdicts:
        terminalreporter.section("acceptance scoreboard")
        for line in verdicts:
            terminalreporter.write_line(line)
