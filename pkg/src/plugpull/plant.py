"""Continuous-time plant models: haptic gripper, UAM translation, kinematic
attitude/joint servos, and the plug-socket spring-breakaway interaction."""

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .arm import njit
from .spatial import euler_rates, psi_matrix, rot_body

E3 = np.array([0.0, 0.0, 1.0])


@dataclass
class GripperState:
    """Haptic gripper joint: a single inertia driven by torque."""

    angle: float = 0.0  # rad
    rate: float = 0.0  # rad/s
    inertia: float = 0.01  # kg m^2


def gripper_accel(state: GripperState, tau_g: float) -> float:
    if state.inertia <= 0:
        raise ValueError("gripper inertia must be positive")
    return tau_g / state.inertia


@dataclass
class UamState:
    """Aerial manipulator state: COM position/velocity, attitude, arm joints."""

    p_c: np.ndarray = field(default_factory=lambda: np.zeros(3))  # m, world
    v_c: np.ndarray = field(default_factory=lambda: np.zeros(3))  # m/s, world
    att: np.ndarray = field(default_factory=lambda: np.zeros(3))  # roll, pitch, yaw
    theta_a: np.ndarray = field(default_factory=lambda: np.zeros(3))  # arm joints + gripper
    mass: float = 2.50  # kg, true total mass
    gravity: float = 9.81


def thrust_vector(thrust: float, att: np.ndarray) -> np.ndarray:
    """World-frame force produced by total thrust at the given attitude."""
    roll, pitch, yaw = att
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    return thrust * psi_matrix(yaw) @ np.array([cr * sp, sr, cr * cp])


def uam_accel(state: UamState, thrust: float, f_ext_body: np.ndarray) -> np.ndarray:
    """COM acceleration under total thrust and a body-frame end-effector force."""
    if thrust < 0:
        raise ValueError("thrust must be non-negative")
    u_c = thrust_vector(thrust, state.att)
    return -state.gravity * E3 + (u_c + rot_body(state.att) @ f_ext_body) / state.mass


# Joint servos on the UAM arm are rate-limited rather than instantaneous so the
# end-effector cannot teleport; the limit sits near a hobby servo's no-load speed.
JOINT_RATE_LIMIT = 4.0  # rad/s


def rate_limited_step(current: np.ndarray, target: np.ndarray, limit: float, dt: float):
    """Move toward target at most limit*dt, never overshooting."""
    delta = np.clip(target - current, -limit * dt, limit * dt)
    return current + delta


def attitude_joint_servo(
    state: UamState, omega_bd: np.ndarray, theta_ad: np.ndarray, dt: float
) -> UamState:
    """Advance the attitude kinematics and the rate-limited joint servo by dt."""
    att_dot = euler_rates(state.att, omega_bd)
    return replace(
        state,
        att=state.att + att_dot * dt,
        theta_a=rate_limited_step(state.theta_a, np.asarray(theta_ad, float), JOINT_RATE_LIMIT, dt),
    )


# UAM end-effector: a 2-DOF wrist that counter-rotates the body tilt, holding a
# fixed tool offset level; the third joint is the gripper and does not move the
# tool point.
TOOL_OFFSET = np.array([0.15, 0.0, -0.10])  # m, in the leveled tool frame


@njit(cache=True)
def _ee_pos_vel_kernel(p_c, v_c, att, theta_a, omega_b, tool):
    """End-effector world position and velocity, written out in scalars."""
    ta1, ta2 = theta_a[0], theta_a[1]
    u = tool[0] * math.cos(ta2) + tool[2] * math.sin(ta2)
    w = -tool[0] * math.sin(ta2) + tool[2] * math.cos(ta2)
    rl0, rl1, rl2 = u, -math.sin(ta1) * w, math.cos(ta1) * w

    sr, cr = math.sin(att[0]), math.cos(att[0])
    sp, cp = math.sin(att[1]), math.cos(att[1])
    sy, cy = math.sin(att[2]), math.cos(att[2])
    r00 = cy * cp; r01 = cy * sp * sr - sy * cr; r02 = cy * sp * cr + sy * sr
    r10 = sy * cp; r11 = sy * sp * sr + cy * cr; r12 = sy * sp * cr - cy * sr
    r20 = -sp;     r21 = cp * sr;               r22 = cp * cr

    p = np.empty(3)
    p[0] = p_c[0] + r00 * rl0 + r01 * rl1 + r02 * rl2
    p[1] = p_c[1] + r10 * rl0 + r11 * rl1 + r12 * rl2
    p[2] = p_c[2] + r20 * rl0 + r21 * rl1 + r22 * rl2

    wx = omega_b[1] * rl2 - omega_b[2] * rl1
    wy = omega_b[2] * rl0 - omega_b[0] * rl2
    wz = omega_b[0] * rl1 - omega_b[1] * rl0
    v = np.empty(3)
    v[0] = v_c[0] + r00 * wx + r01 * wy + r02 * wz
    v[1] = v_c[1] + r10 * wx + r11 * wy + r12 * wz
    v[2] = v_c[2] + r20 * wx + r21 * wy + r22 * wz
    return p, v


def uam_ee_position(state: UamState, tool_offset: np.ndarray = TOOL_OFFSET) -> np.ndarray:
    """World position of the UAM end-effector."""
    p, _ = _ee_pos_vel_kernel(
        state.p_c, state.v_c, state.att, state.theta_a, np.zeros(3), tool_offset
    )
    return p


def uam_ee_velocity(
    state: UamState, omega_b: np.ndarray, tool_offset: np.ndarray = TOOL_OFFSET
) -> np.ndarray:
    """World velocity of the end-effector; joint-rate contribution is neglected
    (the wrist moves slowly under its rate limit)."""
    _, v = _ee_pos_vel_kernel(
        state.p_c, state.v_c, state.att, state.theta_a, np.asarray(omega_b, float), tool_offset
    )
    return v


class AttachState(enum.Enum):
    FREE = "FREE"
    GRASPED = "GRASPED"
    EXTRACTED = "EXTRACTED"


@dataclass
class PlugAttachment:
    """Spring-breakaway stand-in for a plug wedged in a socket.

    While GRASPED the socket pulls the end-effector back with a stiff
    spring-damper; when the spring tension along the wedge axis exceeds the
    breakaway force the plug releases and the interaction force collapses
    exponentially. That collapse is the abrupt force drop the detector keys on.
    """

    state: AttachState = AttachState.FREE
    anchor: np.ndarray = field(default_factory=lambda: np.array([1.15, 0.0, 0.9]))
    wedge_axis: np.ndarray = field(default_factory=lambda: np.array([-1.0, 0.0, 0.0]))
    stiffness: float = 2000.0  # N/m
    damping: float = 20.0  # N s/m
    breakaway_force: float = 15.0  # N
    release_tau: float = 0.01  # s
    capture_radius: float = 0.05  # m
    release_time: float = 0.0  # s, set at breakaway
    release_force: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world N

    def __post_init__(self):
        n = np.linalg.norm(self.wedge_axis)
        if not math.isclose(n, 1.0, rel_tol=1e-9):
            raise ValueError("wedge axis must be a unit vector")
        if min(self.stiffness, self.damping, self.breakaway_force, self.release_tau) <= 0:
            raise ValueError("plug constants must be positive")


def plug_force_world(attach: PlugAttachment, p_ee: np.ndarray, v_ee: np.ndarray, t: float):
    """World-frame interaction force for the current attachment state (pure)."""
    if attach.state is AttachState.GRASPED:
        return -attach.stiffness * (p_ee - attach.anchor) - attach.damping * v_ee
    if attach.state is AttachState.EXTRACTED:
        return attach.release_force * math.exp(-(t - attach.release_time) / attach.release_tau)
    return np.zeros(3)


def plug_transition(
    attach: PlugAttachment, p_ee: np.ndarray, v_ee: np.ndarray, grip_closed: bool, t: float
) -> PlugAttachment:
    """Advance the attachment state machine at a step boundary.

    On capture the spring re-anchors at the grasp point: the jaws close around
    the plug wherever it is, so the wedge preload starts at zero and the
    interaction force stays continuous across the transition.
    """
    if attach.state is AttachState.FREE:
        if grip_closed and np.linalg.norm(p_ee - attach.anchor) < attach.capture_radius:
            return replace(attach, state=AttachState.GRASPED, anchor=p_ee.copy())
    elif attach.state is AttachState.GRASPED:
        tension = attach.stiffness * float((p_ee - attach.anchor) @ attach.wedge_axis)
        if tension > attach.breakaway_force:
            return replace(
                attach,
                state=AttachState.EXTRACTED,
                release_time=t,
                release_force=plug_force_world(attach, p_ee, v_ee, t),
            )
    return attach


def plug_force(
    attach: PlugAttachment,
    p_ee_world: np.ndarray,
    v_ee_world: np.ndarray,
    grip_closed: bool,
    t: float,
    att: np.ndarray | None = None,
):
    """Body-frame interaction force plus the updated attachment.

    ``att`` is the UAM attitude used to express the force in the body frame;
    None means level flight (identity rotation).
    """
    attach = plug_transition(attach, p_ee_world, v_ee_world, grip_closed, t)
    f_world = plug_force_world(attach, p_ee_world, v_ee_world, t)
    if att is None:
        return f_world, attach
    return rot_body(att).T @ f_world, attach
