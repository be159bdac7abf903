import pytest

from greenlab.acceptance import Context


@pytest.fixture(scope="session")
def ctx():
    """Shared memoized context (balls, solves, spectral estimates)."""
    return Context()


@pytest.fixture(scope="session")
def f2_ball(ctx):
    return ctx.ball("f2-M8")


@pytest.fixture(scope="session")
def g2_ball(ctx):
    return ctx.ball("g2-M8")
