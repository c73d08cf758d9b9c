from __future__ import annotations

import numpy as np
import pytest

from hcremez.measure import Grid
from hcremez.spectral import TrigPoly, evaluate_on_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def cos_x(G: int = 4096):
    """``cos x`` sampled on ``G`` nodes."""
    f = TrigPoly.from_dict(1, {1: 0.5, -1: 0.5})
    return evaluate_on_grid(f, Grid((G,)))


def sampled(f, G: int):
    return evaluate_on_grid(f, Grid((G,) * f.dim))
