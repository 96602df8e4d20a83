import numpy as np
import pytest

from crossmoment.scm import NoiseSpec, ScmParams


def make_params(alpha_z=1.0, alpha_d=2.0, beta=1.0, gamma=0.5, family="exponential",
                variances=(1.0, 1.0, 1.0, 1.0), alpha_w=None, var_w=1.0, noise_family="exponential"):
    """Params A by default: alpha_d=2, alpha_z=1, beta=1, gamma=0.5, unit variances."""
    vu, vz, vd, vy = variances
    return ScmParams(
        alpha_z=alpha_z,
        alpha_d=alpha_d,
        beta=beta,
        gamma=gamma,
        noise_u=NoiseSpec(family, vu),
        noise_z=NoiseSpec(noise_family, vz),
        noise_d=NoiseSpec(noise_family, vd),
        noise_y=NoiseSpec(noise_family, vy),
        alpha_w=alpha_w,
        noise_w=NoiseSpec(noise_family, var_w) if alpha_w is not None else None,
    )


@pytest.fixture
def params_a():
    return make_params()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_report(request):
    """Append one summary line per criterion; printed at the end of the session."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(line):
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
