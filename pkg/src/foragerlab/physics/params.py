"""Fixed numerical contract of the simulation.

These values are part of the workbench's reproducibility guarantee:
changing any of them changes every trajectory, so they are module
constants rather than configuration.
"""

# Integration
DT = 0.02                   # seconds per step
GRAVITY = 9.81              # m/s^2, acts along -z
SOLVER_ITERATIONS = 8       # velocity-impulse passes per step

# Material
DENSITY = 500.0             # kg/m^3 for every block
FRICTION_MU = 0.8           # Coulomb friction against ground and blocks
# Restitution is zero everywhere: impacts are perfectly inelastic.

# World layout
GROUND_Z = 0.0
SPAWN_CLEARANCE = 0.01      # lowest vertex starts this far above ground
ABSORB_RADIUS = 2.0         # root block within this distance eats the target

# Stability guard
MAX_BODY_SPEED = 1.0e3      # m/s; faster means the solver diverged

# Joints
MAX_JOINT_SPEED = 3.0       # rad/s commanded at |command| = 1

# Solver tuning (not exposed in configs; fixed for determinism)
CONTACT_SLOP = 0.002        # m, bodies land this far above a surface
PENETRATION_SLOP = 0.0005   # m, tolerated before push-out bias engages
BAUMGARTE_CONTACT = 0.2     # bias factor for contact push-out
BAUMGARTE_JOINT = 0.2       # bias factor for joint drift correction
JOINT_LIMIT_EPS = 1e-3      # minimum gap kept between joint limit bounds

# Anti-cheat settle schedule (seconds): motors off, then on/off cycles.
SETTLE_SCHEDULE = ((False, 2.0), (True, 1.0), (False, 1.0), (True, 1.0), (False, 1.0))
