"""Shared helpers for the test suite."""
from __future__ import annotations

import numpy as np
import pytest


def random_rotation(rng):
    """Uniform-ish random 3x3 rotation built from a QR factorization."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
