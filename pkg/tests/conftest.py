import os

# must be in place before xsr.drr first imports numba so the thread pool is
# large enough to exercise thread-count invariance even on small machines
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

import numpy as np
import pytest

from xsr.volume import CtVolume, OpacityLut, default_head_spec, generate_phantom


@pytest.fixture(scope="session")
def lut():
    return OpacityLut()


@pytest.fixture(scope="session")
def head_volume():
    """Small textured head phantom shared across tests."""
    return generate_phantom(default_head_spec(seed=11, dims=(48, 48, 48)))


@pytest.fixture(scope="session")
def water_slab():
    """Water slab (HU 0) spanning full x/y, 16 slices thick in z, inside air.

    With 1 mm spacing the boundary interpolation ramps make the effective
    thickness exactly 16 mm (half a voxel of ramp on each side).
    """
    hu = np.full((48, 48, 48), -1000, dtype=np.int16)
    hu[16:32, :, :] = 0
    return CtVolume(hu, (1.0, 1.0, 1.0))
