"""Teleoperation reference generation, extraction detection, phase switching,
and the minimum-snap recovery trajectory solver."""

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import DegenerateWindow, OutOfWindow
from .spatial import rot_z


@dataclass
class TeleopParams:
    """Velocity-mapping limits and extraction-detection parameters."""

    v_max: np.ndarray = field(default_factory=lambda: np.array([0.4, 0.4, 0.4]))  # m/s
    p_h_max: np.ndarray = field(default_factory=lambda: np.array([0.2, 0.2, 0.2]))  # m
    fdot_threshold: float = 7.50  # N/s
    recovery_duration: float = 5.0  # s
    arming_force: float = 3.0  # N
    debounce: float = 0.1  # s
    # Bare norm thresholding also fires while the pull force is still building;
    # the guards (grip closed, sustained force, force decreasing) restrict the
    # trigger to the pulling context. Turning them off gives the literal rule.
    guards_enabled: bool = True

    def __post_init__(self):
        if (
            np.any(np.asarray(self.v_max) <= 0)
            or np.any(np.asarray(self.p_h_max) <= 0)
            or min(self.fdot_threshold, self.recovery_duration, self.arming_force, self.debounce)
            <= 0
        ):
            raise ValueError("teleop parameters must be positive")


class Phase(Enum):
    NOMINAL = "NOMINAL"
    RECOVERY = "RECOVERY"


@dataclass
class PhaseState:
    """Two-phase flight state with the entry snapshot for recovery."""

    phase: Phase = Phase.NOMINAL
    t_e: float = 0.0
    p_e: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_e: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frozen_grip: float = 0.0
    armed: bool = False
    force_above_since: float | None = None


def velocity_mapping(params: TeleopParams, p_h: np.ndarray) -> np.ndarray:
    """Saturating handle-displacement to body-velocity map (component-wise)."""
    return params.v_max * np.tanh(np.asarray(p_h, float) / params.p_h_max)


@dataclass
class ReferenceIntegrator:
    """Trapezoidal integrator for the position reference."""

    p_cd: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_prev: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def reanchor(self, p: np.ndarray):
        self.p_cd = np.asarray(p, float).copy()
        self.v_prev = np.zeros(3)


def integrate_reference(
    ref: ReferenceIntegrator, v_body: np.ndarray, yaw: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Rotate the body-frame velocity command by the yaw and advance the
    position reference; returns (p_cd, v_cd_world)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_world = rot_z(yaw) @ np.asarray(v_body, float)
    ref.p_cd = ref.p_cd + 0.5 * (ref.v_prev + v_world) * dt
    ref.v_prev = v_world
    return ref.p_cd.copy(), v_world


def desired_joint_angles(att: np.ndarray, grip: float) -> np.ndarray:
    """Arm joints counter the body tilt (keeping the end-effector level); the
    third joint mirrors the haptic gripper."""
    return np.array([-att[0], -att[1], grip])


def update_arming(
    params: TeleopParams, phase: PhaseState, f_hat: np.ndarray, grip_closed: bool, t: float
) -> PhaseState:
    """Track whether the detector is armed: gripper closed and the force
    estimate held above the arming level through the debounce window."""
    if not params.guards_enabled:
        return replace(phase, armed=True, force_above_since=None)
    above = float(np.linalg.norm(f_hat)) > params.arming_force
    if not (grip_closed and above):
        return replace(phase, armed=False, force_above_since=None)
    since = phase.force_above_since if phase.force_above_since is not None else t
    return replace(phase, armed=(t - since) >= params.debounce, force_above_since=since)


def detect_extraction(
    params: TeleopParams,
    phase: PhaseState,
    f_dot_hat: np.ndarray,
    f_hat: np.ndarray,
    grip_closed: bool,
    t: float,
) -> bool:
    """Extraction trigger: the force-derivative norm reaches the threshold.

    With guards enabled the detector must be armed and the force magnitude
    must be falling (f_hat . f_dot_hat < 0), so the trigger fires on the
    collapse after breakaway rather than on the build-up while pulling.
    """
    if phase.phase is not Phase.NOMINAL:
        return False
    if float(np.linalg.norm(f_dot_hat)) < params.fdot_threshold:
        return False
    if not params.guards_enabled:
        return True
    if not (phase.armed and grip_closed):
        return False
    return float(np.asarray(f_hat, float) @ np.asarray(f_dot_hat, float)) < 0.0


@dataclass
class RecoveryTrajectory:
    """Per-axis degree-7 polynomial in the shifted time s = t - t_e."""

    coeffs: np.ndarray  # (3, 8), ascending powers of s
    t_e: float
    duration: float


# Constraint rows in normalized time sigma = s / T on [0, 1]:
# value at 0, value at 1, and first/second/third derivative rows at 0 or 1.
_POWERS = np.arange(8)


def _deriv_row(order: int, sigma: float) -> np.ndarray:
    row = np.zeros(8)
    for i in range(order, 8):
        fac = 1.0
        for m in range(order):
            fac *= i - m
        row[i] = fac * sigma ** (i - order)
    return row


def _snap_hessian_normalized() -> np.ndarray:
    """Hessian of the integral of squared fourth derivative on [0, 1]."""
    H = np.zeros((8, 8))
    for i in range(4, 8):
        ai = math.factorial(i) / math.factorial(i - 4)
        for j in range(4, 8):
            aj = math.factorial(j) / math.factorial(j - 4)
            H[i, j] = ai * aj / (i + j - 7)
    return H


_H_NORM = _snap_hessian_normalized()


def minsnap_solve(
    p_e: np.ndarray, v_e: np.ndarray, t_e: float, duration: float
) -> RecoveryTrajectory:
    """Minimum-snap polynomial returning to the entry point at rest.

    Per axis: minimize the snap integral over the window subject to matching
    the entry position/velocity, ending at the entry position with zero
    velocity, acceleration and jerk. Solved as a dense KKT system in
    normalized time for conditioning, then rescaled to seconds.
    """
    if duration < 1e-3:
        raise DegenerateWindow(f"recovery window {duration} s too short")
    T = float(duration)
    A = np.vstack(
        [
            _deriv_row(0, 0.0),
            _deriv_row(0, 1.0),
            _deriv_row(1, 0.0),
            _deriv_row(1, 1.0),
            _deriv_row(2, 1.0),
            _deriv_row(3, 1.0),
        ]
    )
    kkt = np.zeros((14, 14))
    kkt[:8, :8] = _H_NORM
    kkt[:8, 8:] = A.T
    kkt[8:, :8] = A
    scale = 1.0 / T ** _POWERS  # sigma-coefficients -> seconds-coefficients

    coeffs = np.zeros((3, 8))
    p_e = np.asarray(p_e, float)
    v_e = np.asarray(v_e, float)
    for ax in range(3):
        rhs = np.zeros(14)
        rhs[8:] = [p_e[ax], p_e[ax], T * v_e[ax], 0.0, 0.0, 0.0]
        sol = np.linalg.solve(kkt, rhs)
        coeffs[ax] = sol[:8] * scale
    return RecoveryTrajectory(coeffs, float(t_e), T)


def minsnap_eval(traj: RecoveryTrajectory, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Position and velocity of the trajectory at time t (Horner evaluation)."""
    s = t - traj.t_e
    if s < -1e-12 or s > traj.duration + 1e-12:
        raise OutOfWindow(f"t = {t} outside [{traj.t_e}, {traj.t_e + traj.duration}]")
    p = np.zeros(3)
    v = np.zeros(3)
    for ax in range(3):
        c = traj.coeffs[ax]
        acc_p = 0.0
        acc_v = 0.0
        for i in range(7, 0, -1):
            acc_p = acc_p * s + c[i]
            acc_v = acc_v * s + i * c[i]
        p[ax] = acc_p * s + c[0]
        v[ax] = acc_v
    return p, v


def snap_integral(traj: RecoveryTrajectory) -> float:
    """Integral of the squared fourth derivative over the window (all axes)."""
    T = traj.duration
    total = 0.0
    for ax in range(3):
        c_norm = traj.coeffs[ax] * T ** _POWERS
        total += float(c_norm @ _H_NORM @ c_norm) / T**7
    return total


def haptic_recovery_rate(
    k_recovery: np.ndarray, q: np.ndarray, q_home: np.ndarray
) -> np.ndarray:
    """Joint-rate command homing the haptic device during recovery."""
    return -np.asarray(k_recovery, float) @ (np.asarray(q, float) - np.asarray(q_home, float))


def phase_step(
    params: TeleopParams,
    phase: PhaseState,
    detection: bool,
    t: float,
    p_c: np.ndarray,
    v_c: np.ndarray,
    grip: float,
) -> PhaseState:
    """Advance the two-phase machine.

    Nominal + detection enters recovery with a snapshot of the current state
    and the gripper angle frozen. Recovery ends after its fixed duration; the
    caller re-anchors the teleop reference and haptic setpoint at the current
    state so re-entry does not jump. Detection is ignored while in recovery.
    """
    if phase.phase is Phase.NOMINAL:
        if detection:
            return replace(
                phase,
                phase=Phase.RECOVERY,
                t_e=t,
                p_e=np.asarray(p_c, float).copy(),
                v_e=np.asarray(v_c, float).copy(),
                frozen_grip=float(grip),
                armed=False,
                force_above_since=None,
            )
        return phase
    if t >= phase.t_e + params.recovery_duration:
        return replace(phase, phase=Phase.NOMINAL, armed=False, force_above_since=None)
    return phase
