"""Constants used throughout the Ekman slab laboratory."""

import importlib.metadata
import pathlib

__project_name__ = __name__.split(".")[0]
__project_path__ = str(pathlib.Path(__file__).parent.parent.parent)
__version__ = importlib.metadata.version(__project_name__)

TRANSFORM_RTOL = 1e-12
PROJECTION_TOL = 1e-10
DENSITY_BOUND_TOL = 1e-10
ENERGY_TOL = 1e-6
JENSEN_TOL = 1e-12

INNER_DAMPING = 0.8
INNER_MAX_ITERATIONS = 50
INNER_TOL = 1e-9
EPSILON_STEP_FACTOR = 0.5
RESIDUAL_ORDER_STRIDES = (1, 2, 4)

SNAPSHOT_MAGIC = b"EKSL"
SNAPSHOT_VERSION = 1
