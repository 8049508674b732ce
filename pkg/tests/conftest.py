import numpy as np
import pytest

from mmdreg.kernels import RadialKernel
from mmdreg.objective import RegularizedProblem


def random_problem(rng, entropy, lam=None, n=None, m=None, dim=2, kernel=None):
    """Random particles/targets in the unit square with a unit gaussian kernel."""
    n = n or int(rng.integers(2, 21))
    m = m or int(rng.integers(2, 21))
    kernel = kernel or RadialKernel("gaussian", 1.0)
    x = rng.uniform(-1, 1, (n, dim))
    y = rng.uniform(-1, 1, (m, dim)) + 0.3
    if lam is None:
        lam = float(10 ** rng.uniform(-1, 1))
    p = RegularizedProblem.build(entropy, kernel, lam, x, y)
    if p.finite and p.entropy.recession > 0 and not p.lam > p.threshold():
        p = p.with_particles(x, 1.5 * p.threshold())
    return p


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_criteria = []


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" in props and report.when == "call":
        _criteria.append((props["criterion"], report.passed, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_criteria):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {detail}")
