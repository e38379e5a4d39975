import time
from contextlib import contextmanager

_RESULTS = {}


class _Criterion:
    def __init__(self, number, title, limit):
        self.number = number
        self.title = title
        self.limit = limit
        self.failures = []
        self.notes = []

    def check(self, ok, detail):
        (self.notes if ok else self.failures).append(detail)


@contextmanager
def criterion(number, title, limit):
    """Time an acceptance criterion and record a one-line verdict for the summary."""
    c = _Criterion(number, title, limit)
    start = time.perf_counter()
    try:
        yield c
    except Exception as exc:
        c.failures.append(f"error: {exc!r}")
        raise
    finally:
        elapsed = time.perf_counter() - start
        if elapsed >= limit:
            c.failures.append(f"runtime {elapsed:.1f}s over {limit}s")
        status = "FAIL" if c.failures else "PASS"
        detail = "; ".join(c.failures or c.notes)
        _RESULTS[number] = f"criterion {number:2d} {status}  {title} ({elapsed:.2f}s): {detail}"
        print(_RESULTS[number])
    assert not c.failures, "; ".join(c.failures)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[number])
