import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from legiboost.color import ColorLexicon, default_lexicon


@pytest.fixture(scope="session")
def lexicon() -> ColorLexicon:
    return default_lexicon()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


def lattice8(arr: np.ndarray) -> np.ndarray:
    """Snap to the 8-bit lattice so PNG round-trips are exact."""
    return np.round(np.clip(arr, 0.0, 1.0) * 255.0) / 255.0
