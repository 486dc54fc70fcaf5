import math


# Quadrature and root-finding tolerances
QUAD_ABS_TOL = 1e-10
QUAD_LIMIT = 200
ROOT_TOL = 1e-10

# Lévy-Itô convention: jumps in the open interval (-1, 1) are compensated
COMPENSATION_INTERVAL = (-1.0, 1.0)

# Backward ODE solver
ODE_MAX_STEP = 1e-3
ODE_RELATIVE_TOL = 1e-8
ODE_INVARIANT_TOL = 1e-8
ODE_MAX_HALVINGS = 30
ODE_MAX_REFINEMENTS = 4

# integral condition: cutoff doubling
INTCOND_INCREMENT_TOL = 1e-8
INTCOND_MAX_CUTOFF = 1e6

# SDE integrator defaults
DEFAULT_JUMP_CUT = 0.05
DEFAULT_EXPLOSION_CAP = 1e12
SMALL_JUMP_MODES = ('drift-only', 'gaussian-correction')

# Trajectory status codes
STATUS_ALIVE = 0
STATUS_ABSORBED = 1
STATUS_EXPLODED_CAP = 2
STATUS_EXPLODED_JUMP = 3
STATUS_NAMES = {
    STATUS_ALIVE: 'alive',
    STATUS_ABSORBED: 'absorbed',
    STATUS_EXPLODED_CAP: 'exploded',
    STATUS_EXPLODED_JUMP: 'exploded',
}

# Asymptotics
SURVIVAL_THRESHOLD = 1e-6
SURVIVAL_THRESHOLD_SENSITIVITY = (1e-4, 1e-6, 1e-8)
MIN_SURVIVORS = 100
DONEY_MALLER_POINTS = (10.0, 100.0, 1000.0)

# First passage / exponential functional truncation
TAIL_RELATIVE_TOL = 1e-8

EULER_GAMMA = 0.5772156649015329
LOG_TWO = math.log(2.0)
