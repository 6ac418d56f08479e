"""Numerical defaults for the engine.

Flask config (see ``app/config.py``) reads the same names from the
environment; engine functions take them as keyword arguments so the engine
never needs an application context.
"""

PRUNE_THRESHOLD = 1e-14
DENSE_QUBIT_CAP = 12
STATEVECTOR_QUBIT_CAP = 20

BCH_ORDER = 4
MAGNUS_ORDER = 3
MAX_BCH_ORDER = 5
MAX_MAGNUS_ORDER = 3
QUADRATURE_NODES = 8

EDGE_EPSILON = 1e-3
SEED_CLAMP = (0.02, 0.98)
NM_XATOL = 1e-9
NM_FATOL = 1e-16
NM_MAXFEV = 500
T_BRACKET = (0.1, 200.0)
T_RTOL = 1e-6
T_SCAN_POINTS = 24
STEP_ERROR_CEILING = 0.05

SMOOTHNESS_THRESHOLD = 0.5
VALIDITY_MARGIN = 0.2

RK4_STEPS = 10_000
RK4_TOLERANCE = 1e-6
RK4_MAX_STEPS = 1_280_000
NORM_DRIFT = 1e-8

GRADIENT_STEP = 1e-3
GRADIENT_TOLERANCE = 1e-5
GRADIENT_MAX_ITER = 2000
