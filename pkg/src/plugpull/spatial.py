"""Rotation matrices, Euler-rate kinematics and the mirror-style yaw map.

Convention: ZYX (yaw-pitch-roll) Euler angles ``(roll, pitch, yaw)``.
``rot_body`` maps body-frame vectors to world-frame vectors.
"""

import math

import numpy as np

from .errors import SingularAttitude

# Pitch values within this margin of +-pi/2 are treated as singular.
SINGULARITY_MARGIN = 1e-3


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(yaw: float) -> np.ndarray:
    """Right-handed rotation about the z-axis."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_body(att: np.ndarray) -> np.ndarray:
    """Body-to-world rotation for Euler angles ``att = (roll, pitch, yaw)``."""
    roll, pitch, yaw = att
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    # Rz(yaw) @ Ry(pitch) @ Rx(roll), written out
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def psi_matrix(yaw: float) -> np.ndarray:
    """Yaw-dependent thrust-direction map used by the translational model.

    Involutory by construction (``psi @ psi == I``). Its determinant is -1,
    i.e. it is a reflection; the thrust/attitude extraction formulas are
    self-consistent with that and the sign is deliberately left as is.
    """
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, s, 0.0], [s, -c, 0.0], [0.0, 0.0, 1.0]])


def q_matrix(att: np.ndarray) -> np.ndarray:
    """Map from Euler-angle rates to body angular velocity: omega = Q @ att_dot."""
    roll, pitch = att[0], att[1]
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    return np.array([[1.0, 0.0, -sp], [0.0, cr, sr * cp], [0.0, -sr, cr * cp]])


def euler_rates(att: np.ndarray, omega_d: np.ndarray) -> np.ndarray:
    """Euler-angle rates realizing a commanded body angular velocity.

    Closed-form inverse of ``q_matrix``. Raises SingularAttitude when the
    pitch is within SINGULARITY_MARGIN of +-pi/2, where the map loses rank.
    """
    roll, pitch = att[0], att[1]
    if abs(abs(pitch) - 0.5 * math.pi) < SINGULARITY_MARGIN:
        raise SingularAttitude(f"pitch {pitch:.6f} rad too close to +-pi/2")
    cr, sr = math.cos(roll), math.sin(roll)
    cp = math.cos(pitch)
    tp = math.tan(pitch)
    p, q, r = omega_d
    return np.array(
        [
            p + sr * tp * q + cr * tp * r,
            cr * q - sr * r,
            (sr * q + cr * r) / cp,
        ]
    )
