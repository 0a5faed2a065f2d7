"""Shared fixtures: seeded generators, random states and rotations."""

import math
import os
import tempfile

os.environ.setdefault('POLARISCOPE_LOG_DIR', tempfile.mkdtemp(prefix='polariscope-logs-'))

import numpy as np
import pytest

from src.angular.half_int import HalfInt
from src.angular.rotations import Direction, EulerAngles
from src.fock.states import random_layer_state, state_from_layers


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_euler(rng) -> EulerAngles:
    return EulerAngles(rng.uniform(0, 2 * math.pi), math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi))


def random_direction(rng) -> Direction:
    return Direction(math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi))


def random_mixture(rng, max_twice_spin: int):
    """Block-diagonal state over a random subset of layers 0 ... max spin"""
    twice_spins = sorted(set(rng.integers(0, max_twice_spin + 1, size=3).tolist()) | {max_twice_spin})
    layers = [random_layer_state(HalfInt(t), t + 1, int(rng.integers(1 << 30))) for t in twice_spins]
    weights = rng.dirichlet(np.ones(len(layers)))
    return state_from_layers(layers, weights)


@pytest.fixture
def euler_factory(rng):
    return lambda: random_euler(rng)


@pytest.fixture
def direction_factory(rng):
    return lambda: random_direction(rng)
