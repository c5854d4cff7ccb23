"""Shared fixtures and small helpers for the test suite."""

import pytest

from driftlab import PathRecord, TransitionKernel, constant_spec

# Kernels reused across files.
NORTH = TransitionKernel(0.0, 0.0, 1.0, 0.0)
DRIFT = TransitionKernel(0.1, 0.1, 0.7, 0.1)  # north-drift workhorse
FLAT = TransitionKernel(0.25, 0.25, 0.25, 0.25)


def record_from_sites(sites):
    """A PathRecord carrying only a site sequence (enough for functionals)."""
    return PathRecord(sites=list(sites), consumed=[])


def vertical_record(heights):
    """Path that stays on x=0 and visits the given absolute heights."""
    return record_from_sites([(0, y) for y in heights])


@pytest.fixture
def north_spec():
    return constant_spec(NORTH, 0)


@pytest.fixture
def drift_spec():
    return constant_spec(DRIFT, 0)
