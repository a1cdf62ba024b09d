import pytest

from secthru import FadingLaw, LinkBudget, Tolerances


@pytest.fixture
def law():
    return FadingLaw(mean_gain=1.0)


@pytest.fixture
def link():
    return LinkBudget(avg_snr=1.0, gamma=1.0)


@pytest.fixture
def fast_tol():
    # unit tests that only need ~1e-4 accuracy run the solvers at this setting
    return Tolerances(quad_rel_tol=1e-6, root_tol=1e-10)
