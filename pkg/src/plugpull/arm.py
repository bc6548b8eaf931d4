"""Rigid-body model of the 4-DOF haptic arm.

Kinematic layout: joint 1 yaws about the base z-axis, a vertical riser link
leads to the shoulder, and joints 2-4 pitch about the (yawed) y-axis forming
a planar 3R chain. Link masses are lumped at the link tips; the gripper is a
point payload at the end-effector. Each joint carries a small reflected rotor
inertia so the mass matrix stays well conditioned in stretched poses.

The mass/Coriolis/gravity terms are closed forms derived from the point-mass
kinetic and potential energies; the Coriolis matrix uses Christoffel symbols,
so ``Mdot - 2C`` is skew-symmetric.
"""

import math
from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, fallback kept for safety
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap(args[0]) if args and callable(args[0]) else wrap


@dataclass(frozen=True)
class HapticArmModel:
    """Geometry and inertial parameters of the haptic arm."""

    link_lengths: tuple = (0.10, 0.20, 0.20, 0.10)  # m; first link is the riser
    link_masses: tuple = (0.30, 0.25, 0.20, 0.15)  # kg, lumped at link tips
    payload_mass: float = 0.10  # kg, gripper treated as a point mass at the tip
    rotor_inertia: float = 5e-3  # kg m^2 reflected at each joint (geared servo)
    gravity: float = 9.81  # m/s^2

    def __post_init__(self):
        if len(self.link_lengths) != 4 or len(self.link_masses) != 4:
            raise ValueError("the arm has exactly 4 links")
        if min(self.link_lengths) <= 0 or min(self.link_masses) <= 0:
            raise ValueError("link lengths and masses must be positive")
        if self.payload_mass <= 0 or self.rotor_inertia <= 0:
            raise ValueError("payload mass and rotor inertia must be positive")

    @property
    def _params(self) -> tuple:
        l = np.asarray(self.link_lengths, dtype=float)
        # moving point masses sit at the tips of links 2-4; the tip carries
        # link 4's mass plus the payload, link 1's mass rides the z-axis and
        # has no dynamic effect
        mu = np.array(
            [self.link_masses[1], self.link_masses[2], self.link_masses[3] + self.payload_mass]
        )
        return l, mu, self.rotor_inertia, self.gravity


@dataclass
class HapticArmState:
    """Joint positions and velocities."""

    q: np.ndarray = field(default_factory=lambda: np.zeros(4))
    qd: np.ndarray = field(default_factory=lambda: np.zeros(4))


def _mcg_kernel(l, mu, jr, g, q, qd):
    """Closed-form (M, C, G) for the riser + planar-3R point-mass chain."""
    a2 = q[1]
    a3 = q[1] + q[2]
    a4 = q[1] + q[2] + q[3]
    al = (a2, a3, a4)
    c = (math.cos(a2), math.cos(a3), math.cos(a4))
    s = (math.sin(a2), math.sin(a3), math.sin(a4))
    ll = (l[1], l[2], l[3])

    M = np.zeros((4, 4))
    G = np.zeros(4)
    dM = np.zeros((4, 4, 4))

    # yaw inertia: sum of m r^2 over the moving masses
    r = np.zeros(3)
    acc = 0.0
    for j in range(3):
        acc += ll[j] * c[j]
        r[j] = acc
    m00 = jr
    for a in range(3):
        m00 += mu[a] * r[a] * r[a]
    M[0, 0] = m00

    # planar block: row/col m,n over pitch joints, masses a at link tips
    for m in range(1, 4):
        for n in range(1, 4):
            acc = 0.0
            for a in range(3):
                for j in range(m - 1, a + 1):
                    for k in range(n - 1, a + 1):
                        acc += mu[a] * ll[j] * ll[k] * math.cos(al[j] - al[k])
            M[m, n] = acc
        M[m, m] += jr

    # gravity torques (yaw joint sees none)
    for m in range(1, 4):
        acc = 0.0
        for a in range(3):
            for j in range(m - 1, a + 1):
                acc += mu[a] * ll[j] * c[j]
        G[m] = -g * acc

    # partials of M wrt the pitch joints (nothing depends on yaw)
    for p in range(1, 4):
        acc = 0.0
        for a in range(3):
            dr = 0.0
            for j in range(p - 1, a + 1):
                dr -= ll[j] * s[j]
            acc += 2.0 * mu[a] * r[a] * dr
        dM[p, 0, 0] = acc
        for m in range(1, 4):
            for n in range(1, 4):
                acc = 0.0
                for a in range(3):
                    for j in range(m - 1, a + 1):
                        for k in range(n - 1, a + 1):
                            w = (1.0 if p - 1 <= j else 0.0) - (1.0 if p - 1 <= k else 0.0)
                            if w != 0.0:
                                acc -= mu[a] * ll[j] * ll[k] * math.sin(al[j] - al[k]) * w
                dM[p, m, n] = acc

    # Christoffel-symbol Coriolis matrix
    C = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            acc = 0.0
            for k in range(4):
                acc += (dM[k, i, j] + dM[j, i, k] - dM[i, j, k]) * qd[k]
            C[i, j] = 0.5 * acc
    return M, C, G


def _fk_kernel(l, q):
    """End-effector position and 3x4 translational Jacobian in the base frame."""
    c1, s1 = math.cos(q[0]), math.sin(q[0])
    a = (q[1], q[1] + q[2], q[1] + q[2] + q[3])
    ll = (l[1], l[2], l[3])
    rad = 0.0
    z = l[0]
    for j in range(3):
        rad += ll[j] * math.cos(a[j])
        z -= ll[j] * math.sin(a[j])
    p = np.array([rad * c1, rad * s1, z])

    J = np.zeros((3, 4))
    J[0, 0] = -rad * s1
    J[1, 0] = rad * c1
    for m in range(1, 4):
        dr = 0.0
        dz = 0.0
        for j in range(m - 1, 3):
            dr -= ll[j] * math.sin(a[j])
            dz -= ll[j] * math.cos(a[j])
        J[0, m] = dr * c1
        J[1, m] = dr * s1
        J[2, m] = dz
    return p, J


def _servo_accel_kernel(l, mu, jr, g, q, qd, sp_q, sp_qd, kp, kd, tau_ext):
    """Joint accelerations with the servo's internal PD + gravity compensation
    evaluated continuously (the physical servo loop runs far above the outer
    control rate, so its torque is not zero-order held)."""
    M, C, G = _mcg_kernel(l, mu, jr, g, q, qd)
    tau_servo = G - kp * (q - sp_q) - kd * (qd - sp_qd)
    rhs = tau_servo + tau_ext - C @ qd - G
    return np.linalg.solve(M, rhs)


if _HAVE_NUMBA:
    _mcg_kernel = njit(cache=True)(_mcg_kernel)
    _fk_kernel = njit(cache=True)(_fk_kernel)
    _servo_accel_kernel = njit(cache=True)(_servo_accel_kernel)


def arm_dynamics(model: HapticArmModel, state: HapticArmState):
    """Mass matrix, Christoffel Coriolis matrix and gravity vector at a state."""
    l, mu, jr, g = model._params
    return _mcg_kernel(l, mu, jr, g, np.asarray(state.q, float), np.asarray(state.qd, float))


def arm_accel(
    model: HapticArmModel, state: HapticArmState, tau: np.ndarray, tau_ext: np.ndarray
) -> np.ndarray:
    """Joint accelerations under applied and external torques."""
    M, C, G = arm_dynamics(model, state)
    return np.linalg.solve(M, tau + tau_ext - C @ state.qd - G)


def arm_fk(model: HapticArmModel, q: np.ndarray):
    """End-effector position (base frame) and translational Jacobian."""
    l = np.asarray(model.link_lengths, dtype=float)
    return _fk_kernel(l, np.asarray(q, float))


def arm_potential(model: HapticArmModel, q: np.ndarray) -> float:
    """Gravitational potential energy of the moving masses (riser mass excluded:
    it never moves and only shifts the zero level)."""
    l, mu, _, g = model._params
    a = (q[1], q[1] + q[2], q[1] + q[2] + q[3])
    z = l[0]
    u = 0.0
    for j in range(3):
        z -= l[j + 1] * math.sin(a[j])
        u += mu[j] * z
    return g * u


def arm_kinetic_energy(model: HapticArmModel, state: HapticArmState) -> float:
    M, _, _ = arm_dynamics(model, state)
    return 0.5 * float(state.qd @ M @ state.qd)
