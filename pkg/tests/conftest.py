import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wavedistill.filters import standard_bank

BANKS = ("haar", "db5", "sym5", "coif2")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(params=BANKS)
def bank(request):
    return standard_bank(request.param)
