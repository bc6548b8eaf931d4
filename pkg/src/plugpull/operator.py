"""Scripted human operator with a reaction delay.

The operator steers the haptic handle to fly the UAM's end-effector to the
socket, squeezes the gripper, pulls until the plug breaks away, and only
starts relaxing the pull a reaction time after the true separation. The hand
is a first-order force source plus grip damping while it is on the handle.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .config import OperatorConfig
from .plant import AttachState


class OpPhase(enum.Enum):
    APPROACH = "APPROACH"
    GRASP = "GRASP"
    PULL = "PULL"
    REACT = "REACT"
    IDLE = "IDLE"


@dataclass
class OperatorState:
    phase: OpPhase = OpPhase.APPROACH
    hand_force: np.ndarray = field(default_factory=lambda: np.zeros(3))  # filtered, N
    grip_torque: float = 0.0  # N m
    waypoint_idx: int = 0
    on_target_since: float | None = None
    grasp_start: float | None = None
    captured_at: float | None = None
    rng: np.random.Generator | None = None

    @classmethod
    def initial(cls, cfg: OperatorConfig, seed: int) -> "OperatorState":
        phase = OpPhase.IDLE if cfg.idle else OpPhase.APPROACH
        rng = np.random.default_rng(seed) if cfg.tremor_force > 0 else None
        return cls(phase=phase, rng=rng)


@dataclass
class ObservedScene:
    """What the operator can see and feel at a control boundary."""

    p_h: np.ndarray  # handle displacement from home, m
    v_h: np.ndarray  # handle velocity, m/s
    jac: np.ndarray  # 3x4 handle Jacobian (maps the hand force to joint torques)
    ee_world: np.ndarray  # UAM end-effector position (watched directly)
    anchor: np.ndarray  # socket location the operator aims for
    attach: AttachState
    separation_time: float | None  # true breakaway instant, once it happened


def _clip_norm(v: np.ndarray, cap: float) -> np.ndarray:
    n = float(np.linalg.norm(v))
    return v if n <= cap else v * (cap / n)


def operator_step(cfg: OperatorConfig, op: OperatorState, scene: ObservedScene, t: float, dt: float):
    """Advance the operator one control period.

    Returns (state', tau_he, tau_g): joint torques applied to the haptic arm
    and the grip torque squeezing the haptic gripper.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if op.phase is OpPhase.IDLE:
        return op, np.zeros(4), 0.0

    phase = op.phase
    waypoint_idx = op.waypoint_idx
    on_target_since = op.on_target_since
    grasp_start = op.grasp_start
    captured_at = op.captured_at
    grip_target = op.grip_torque

    targets = [np.asarray(w, float) for w in cfg.approach_waypoints] + [scene.anchor]

    if phase is OpPhase.APPROACH:
        err = targets[waypoint_idx] - scene.ee_world
        dist = float(np.linalg.norm(err))
        if waypoint_idx < len(targets) - 1:
            if dist < cfg.waypoint_radius:
                waypoint_idx += 1
                on_target_since = None
        else:
            if dist < cfg.final_radius:
                if on_target_since is None:
                    on_target_since = t
                elif t - on_target_since >= cfg.pre_grasp_hold:
                    phase = OpPhase.GRASP
                    grasp_start = t
            else:
                on_target_since = None
        handle_target = _clip_norm(cfg.guidance_gain * err, cfg.steer_cap)
        force_target = cfg.steer_stiffness * (handle_target - scene.p_h)
        grip_target = 0.0
    if phase is OpPhase.GRASP:
        force_target = cfg.steer_stiffness * (-scene.p_h)
        assert grasp_start is not None
        ramp = min(1.0, (t - grasp_start) / cfg.grasp_ramp)
        grip_target = ramp * cfg.grasp_torque
        if scene.attach is AttachState.GRASPED:
            if captured_at is None:
                captured_at = t
            if t - captured_at >= cfg.post_grasp_hold:
                phase = OpPhase.PULL
    if phase is OpPhase.PULL:
        # pull straight: full force along the pull axis, steering the handle
        # back to center on the orthogonal axes
        d = np.asarray(cfg.pull_dir, float)
        perp = scene.p_h - d * float(d @ scene.p_h)
        force_target = d * cfg.pull_force - cfg.steer_stiffness * perp
        grip_target = cfg.grasp_torque
        if scene.separation_time is not None and t >= scene.separation_time + cfg.reaction_time:
            phase = OpPhase.REACT
    if phase is OpPhase.REACT:
        # the hand stays on the handle (damping keeps acting) but stops pulling
        force_target = np.zeros(3)
        grip_target = cfg.grasp_torque

    hand_force = op.hand_force + (dt / cfg.hand_tau) * (force_target - op.hand_force)
    applied = hand_force - cfg.hand_damping * scene.v_h
    rng = op.rng
    if rng is not None:
        applied = applied + cfg.tremor_force * rng.standard_normal(3)
    tau_he = scene.jac.T @ applied

    out = OperatorState(
        phase=phase,
        hand_force=hand_force,
        grip_torque=grip_target,
        waypoint_idx=waypoint_idx,
        on_target_since=on_target_since,
        grasp_start=grasp_start,
        captured_at=captured_at,
        rng=rng,
    )
    return out, tau_he, grip_target
