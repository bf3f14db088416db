from fractions import Fraction

import pytest

from affwalk import AffineMap, StepDistribution


@pytest.fixture
def mu_bias() -> StepDistribution:
    """Doubling with weight 1/4, halving-and-shifting with weight 3/4.

    The 2-adic norm of the linear part shrinks on average, so the walk
    contracts on the real line and spreads out 2-adically.
    """
    return StepDistribution(
        {AffineMap(2, 0): Fraction(1, 4), AffineMap(Fraction(1, 2), 1): Fraction(3, 4)}
    )


@pytest.fixture
def mu_sym() -> StepDistribution:
    """Fair coin between doubling and halving-and-shifting: all drifts zero."""
    return StepDistribution(
        {AffineMap(2, 0): Fraction(1, 2), AffineMap(Fraction(1, 2), 1): Fraction(1, 2)}
    )


@pytest.fixture
def mu_rev() -> StepDistribution:
    """Weight-reversed variant of mu_bias: contracts 2-adically instead."""
    return StepDistribution(
        {AffineMap(2, 0): Fraction(3, 4), AffineMap(Fraction(1, 2), 1): Fraction(1, 4)}
    )
