"""Feedback laws for both ends of the teleoperation loop.

UAM side: PD position control with disturbance cancellation, thrust/attitude
extraction, and proportional attitude-rate control. Haptic side: admittance
rendering of the estimated hand torque, recentering spring, gripper
compliance, and the PD+gravity joint servo standing in for the device's
position-mode motors.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateThrust
from .spatial import psi_matrix

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

# Floor under the extracted thrust and clamp margin for the arcsin arguments;
# transient position-control outputs can exceed geometric feasibility and must
# not crash the loop.
MIN_THRUST = 0.1  # N
ASIN_CLAMP = 1.0 - 1e-9
# Desired roll/pitch are clamped away from the Euler-rate singularity.
TILT_LIMIT = 0.5  # rad


@dataclass
class UamGains:
    """Position/attitude gains and nominal plant constants for the UAM."""

    kp: np.ndarray = field(default_factory=lambda: np.diag([4.00, 4.00, 8.00]))
    kd: np.ndarray = field(default_factory=lambda: np.diag([3.00, 3.00, 4.80]))
    kr: np.ndarray = field(default_factory=lambda: np.diag([12.0, 12.0, 10.0]))
    m_hat: float = 2.50
    g_hat: float = 9.81


@dataclass
class AdmittanceGains:
    """Desired impedance and feedback gains for the haptic device."""

    m_d: np.ndarray = field(default_factory=lambda: np.diag([0.20, 0.20, 0.20, 0.20]))
    d_d: np.ndarray = field(default_factory=lambda: np.diag([0.10, 0.50, 0.10, 0.10]))
    k_fb: np.ndarray = field(default_factory=lambda: np.diag([3.00, 1.00, 7.50, 7.50]))
    k_recovery: np.ndarray = field(default_factory=lambda: np.diag([6.00, 2.00, 15.0, 15.0]))
    k_dg: float = 0.50
    k_fbg: float = 8.00
    k_tau: float = 15.0


@dataclass
class HapticSetpoint:
    """Setpoints rendered by the admittance/compliance integrators."""

    q_d: np.ndarray = field(default_factory=lambda: np.zeros(4))
    qd_d: np.ndarray = field(default_factory=lambda: np.zeros(4))
    grip_d: float = 0.0
    grip_rate_d: float = 0.0


def position_control(
    gains: UamGains,
    p_c: np.ndarray,
    v_c: np.ndarray,
    p_cd: np.ndarray,
    v_cd: np.ndarray,
    f_hat_body: np.ndarray,
    r_b: np.ndarray,
) -> np.ndarray:
    """Desired thrust-input vector: gravity feedforward, PD on the tracking
    error, and cancellation of the estimated external force."""
    return (
        gains.m_hat
        * (gains.g_hat * E3 - gains.kd @ (v_c - v_cd) - gains.kp @ (p_c - p_cd))
        - r_b @ f_hat_body
    )


def extract_thrust_attitude(u_cd: np.ndarray, att: np.ndarray):
    """Total thrust and desired roll/pitch realizing the thrust-input vector.

    The current roll/pitch appear in the denominators; at the attitude
    equilibrium the reassembled thrust vector reproduces ``u_cd`` exactly.
    """
    roll, pitch, yaw = att
    w = psi_matrix(yaw) @ u_cd
    cr, cp = math.cos(roll), math.cos(pitch)
    thrust = w[2] / (cr * cp)
    if thrust < MIN_THRUST:
        raise DegenerateThrust(f"extracted thrust {thrust:.3f} N below {MIN_THRUST} N")
    arg1 = min(max(w[1] / thrust, -ASIN_CLAMP), ASIN_CLAMP)
    roll_d = math.asin(arg1)
    arg2 = min(max(w[0] / (thrust * cr), -ASIN_CLAMP), ASIN_CLAMP)
    pitch_d = math.asin(arg2)
    return thrust, roll_d, pitch_d


def clamp_tilt(angle: float) -> float:
    return min(max(angle, -TILT_LIMIT), TILT_LIMIT)


def attitude_rate_control(gains: UamGains, att_d: np.ndarray, att: np.ndarray) -> np.ndarray:
    """Proportional body-rate command from the attitude error."""
    return gains.kr @ (np.asarray(att_d, float) - np.asarray(att, float))


def admittance_step(
    gains: AdmittanceGains,
    sp: HapticSetpoint,
    tau_hat_ext: np.ndarray,
    tau_fb: np.ndarray,
    jac: np.ndarray,
    f_hat_body: np.ndarray,
    dt: float,
) -> HapticSetpoint:
    """Render the desired mass-damper response to the net torque.

    The net torque is the estimated hand torque plus the recentering torque
    plus the reflected end-effector force mapped through the Jacobian
    transpose. Semi-implicit Euler keeps the damped integrator stable at the
    control period.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    tau_net = tau_hat_ext + tau_fb + jac.T @ f_hat_body
    qdd = np.linalg.solve(gains.m_d, tau_net - gains.d_d @ sp.qd_d)
    qd_d = sp.qd_d + qdd * dt
    q_d = sp.q_d + qd_d * dt
    return HapticSetpoint(q_d, qd_d, sp.grip_d, sp.grip_rate_d)


def recentering_torque(gains: AdmittanceGains, q: np.ndarray, q_home: np.ndarray) -> np.ndarray:
    """Spring torque pulling the device back to its initial configuration."""
    return -gains.k_fb @ (np.asarray(q, float) - np.asarray(q_home, float))


def gripper_compliance_step(
    gains: AdmittanceGains,
    grip_d: float,
    grip_rate_d: float,
    grip_meas: float,
    grip_home: float,
    tau_g: float,
    dt: float,
):
    """Update the gripper angle setpoint so it yields to the hand's grip torque."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    acc = -gains.k_dg * grip_rate_d - gains.k_fbg * (grip_meas - grip_home) + gains.k_tau * tau_g
    grip_rate_d = grip_rate_d + acc * dt
    grip_d = grip_d + grip_rate_d * dt
    return grip_d, grip_rate_d


# Inner joint servo standing in for the device's position-mode motors.
SERVO_KP = 50.0
SERVO_KD = 5.0


def arm_joint_servo(
    q: np.ndarray, qd: np.ndarray, sp: HapticSetpoint, gravity: np.ndarray
) -> np.ndarray:
    """PD tracking of the setpoint plus gravity compensation."""
    return gravity - SERVO_KP * (q - sp.q_d) - SERVO_KD * (qd - sp.qd_d)
