import pytest


@pytest.fixture
def reseed_once():
    """Retry policy for 3-sigma stochastic checks.

    A correctly calibrated check still fails by chance roughly 0.3% of the
    time per statistic, so a failing check is rerun exactly once at a fixed
    alternate seed before counting as a real failure.
    """

    def run(check, primary_seed, alternate_seed):
        try:
            check(primary_seed)
        except AssertionError:
            check(alternate_seed)

    return run
