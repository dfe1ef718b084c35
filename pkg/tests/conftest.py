import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_k(rng, n, scale=3.0, min_norm=1e-3):
    k = rng.uniform(-scale, scale, size=(n, 2))
    small = np.hypot(k[:, 0], k[:, 1]) < min_norm
    k[small] += 2 * min_norm
    return k[:, 0], k[:, 1]


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict(capsys):
    """Collect named sub-checks, print one PASS/FAIL line, then assert."""

    class Verdict:
        def __init__(self):
            self.checks = []

        def check(self, label, ok, detail=""):
            self.checks.append((label, bool(ok), detail))
            return ok

        def finish(self, criterion, title, seconds, budget):
            self.check(f"runtime {seconds:.2f}s < {budget:g}s", seconds < budget)
            ok = all(c[1] for c in self.checks)
            failed = [f"{label} [{detail}]" if detail else label for label, good, detail in self.checks if not good]
            line = f"criterion {criterion:>2} {'PASS' if ok else 'FAIL'}: {title} ({seconds:.2f}s)"
            if failed:
                line += " -- failed: " + "; ".join(failed)
            ACCEPTANCE_LINES.append(line)
            with capsys.disabled():
                print("\n" + line)
            assert ok, line

    return Verdict()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
