import os

# keep assembly single-threaded unless the caller asks otherwise
os.environ.setdefault("POROFLOW_THREADS", "1")

# acceptance verdicts, filled in by test_acceptance.py and echoed in the summary
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'pass' if ok else 'fail'}  {detail}")
