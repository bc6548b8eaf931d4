"""Exception types shared across the simulator."""


class PlugpullError(Exception):
    """Base class for all library errors."""


class SingularAttitude(PlugpullError):
    """Pitch too close to +-pi/2 for the Euler-rate kinematics to be invertible."""


class DegenerateThrust(PlugpullError):
    """Commanded thrust below the minimum needed to extract attitude angles."""


class DegenerateWindow(PlugpullError):
    """Recovery window too short to pose the trajectory problem."""


class OutOfWindow(PlugpullError):
    """Trajectory evaluated outside its validity window."""


class ConfigError(PlugpullError):
    """Scenario configuration failed validation."""


class NumericalDivergence(PlugpullError):
    """Simulation state left the sanity envelope (blow-up guard)."""
