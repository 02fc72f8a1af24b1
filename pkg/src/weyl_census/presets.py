"""Demo generator systems shipped with the package.

``sl2`` is the classical pair diag(4, 1/4) and its conjugate by a rotation
through pi/4 (rank one).  ``sl3`` pairs diag(4, 1, 1/4) with its conjugate
by a fixed generic rotation, raised to the least power at which the pair
validates (rank two).
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

from .schottky import SchottkySystem, load_system

__all__ = ["PRESETS", "preset_config", "preset_system", "preset_names"]

SL3_EULER = (0.7, 1.1, 0.4)  # zyx angles of the conjugating rotation


def _sl2() -> dict:
    a = np.diag([4.0, 0.25])
    c = s = np.sqrt(0.5)
    k = np.array([[c, -s], [s, c]])
    return {
        "name": "sl2",
        "dimension": 2,
        "generators": [a.ravel().tolist(), (k @ a @ k.T).ravel().tolist()],
        "power": 1,
        "ball_radius": 0.2,
    }


def _sl3() -> dict:
    a = np.diag([4.0, 1.0, 0.25])
    k = Rotation.from_euler("zyx", SL3_EULER).as_matrix()
    return {
        "name": "sl3",
        "dimension": 3,
        "generators": [a.ravel().tolist(), (k @ a @ k.T).ravel().tolist()],
        "power": 3,  # least passing power, see tests
        "ball_radius": 0.2,
    }


PRESETS = {
    "sl2": ("SL(2,R) pair, rank 1", _sl2),
    "sl3": ("SL(3,R) pair, rank 2", _sl3),
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset_config(name: str) -> dict:
    try:
        return PRESETS[name][1]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {preset_names()}") from None


def preset_system(name: str) -> SchottkySystem:
    return load_system(preset_config(name))
