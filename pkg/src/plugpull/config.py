"""Scenario configuration: plain-data dataclasses mirrored one-to-one by the
JSON config file (see docs/config.md). Defaults are the stock gain set for
the haptic device and the UAM; every field can be overridden from JSON."""

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .arm import HapticArmModel
from .controllers import AdmittanceGains, UamGains
from .errors import ConfigError
from .plant import PlugAttachment
from .teleop import TeleopParams


@dataclass
class ArmConfig:
    link_lengths: list = field(default_factory=lambda: [0.10, 0.20, 0.20, 0.10])
    link_masses: list = field(default_factory=lambda: [0.30, 0.25, 0.20, 0.15])
    payload_mass: float = 0.10
    rotor_inertia: float = 5e-3
    home: list = field(default_factory=lambda: [0.0, 0.3, -1.6, -0.5])
    travel: float = 0.9  # rad, hard stops either side of home

    def build(self, gravity: float) -> HapticArmModel:
        return HapticArmModel(
            link_lengths=tuple(self.link_lengths),
            link_masses=tuple(self.link_masses),
            payload_mass=self.payload_mass,
            rotor_inertia=self.rotor_inertia,
            gravity=gravity,
        )


@dataclass
class GripperConfig:
    inertia: float = 0.01  # kg m^2
    open_angle: float = 0.0
    closed_angle: float = 1.0
    closed_threshold: float = 0.8  # haptic side counts as closed above this
    uam_closed_threshold: float = 0.7  # UAM jaw grips the plug above this
    servo_kp: float = 2.0
    servo_kd: float = 0.2


@dataclass
class UamConfig:
    mass: float = 2.50  # true total mass, kg
    gravity: float = 9.81
    start_position: list = field(default_factory=lambda: [0.0, 0.0, 1.0])
    tool_offset: list = field(default_factory=lambda: [0.15, 0.0, -0.10])


@dataclass
class PlugConfig:
    anchor: list = field(default_factory=lambda: [1.15, 0.0, 0.9])
    wedge_axis: list = field(default_factory=lambda: [-1.0, 0.0, 0.0])
    stiffness: float = 2000.0
    damping: float = 20.0
    breakaway_force: float = 15.0
    release_tau: float = 0.01
    capture_radius: float = 0.05

    def build(self) -> PlugAttachment:
        return PlugAttachment(
            anchor=np.asarray(self.anchor, float),
            wedge_axis=np.asarray(self.wedge_axis, float),
            stiffness=self.stiffness,
            damping=self.damping,
            breakaway_force=self.breakaway_force,
            release_tau=self.release_tau,
            capture_radius=self.capture_radius,
        )


@dataclass
class GainsConfig:
    """Diagonal controller gains (stock values)."""

    kp: list = field(default_factory=lambda: [4.00, 4.00, 8.00])
    kd: list = field(default_factory=lambda: [3.00, 3.00, 4.80])
    kr: list = field(default_factory=lambda: [12.0, 12.0, 10.0])
    m_hat: float = 2.50
    g_hat: float = 9.81
    m_d: list = field(default_factory=lambda: [0.20, 0.20, 0.20, 0.20])
    d_d: list = field(default_factory=lambda: [0.10, 0.50, 0.10, 0.10])
    k_fb: list = field(default_factory=lambda: [3.00, 1.00, 7.50, 7.50])
    k_recovery: list = field(default_factory=lambda: [6.00, 2.00, 15.0, 15.0])
    k_dg: float = 0.50
    k_fbg: float = 8.00
    k_tau: float = 15.0
    momentum_gain: float = 30.0

    def build_uam(self) -> UamGains:
        return UamGains(
            kp=np.diag(self.kp), kd=np.diag(self.kd), kr=np.diag(self.kr),
            m_hat=self.m_hat, g_hat=self.g_hat,
        )

    def build_admittance(self) -> AdmittanceGains:
        return AdmittanceGains(
            m_d=np.diag(self.m_d), d_d=np.diag(self.d_d), k_fb=np.diag(self.k_fb),
            k_recovery=np.diag(self.k_recovery),
            k_dg=self.k_dg, k_fbg=self.k_fbg, k_tau=self.k_tau,
        )


@dataclass
class DobConfig:
    # The stock filter constant is 0.90; estimation runs at the reduced 0.20
    # because the faster estimate is what control and detection consume.
    nu_default: float = 0.90
    nu_estimation: float = 0.20
    gamma_zeta: list = field(default_factory=lambda: [1.00, 1.00, 1.00])
    gamma_chi: list = field(default_factory=lambda: [1.00, 1.00, 1.00])


@dataclass
class KfConfig:
    q_intensity: float = 100.0  # N^2/s^3
    r_var: float = 0.01  # N^2


@dataclass
class TeleopConfig:
    v_max: list = field(default_factory=lambda: [0.4, 0.4, 0.4])
    p_h_max: list = field(default_factory=lambda: [0.2, 0.2, 0.2])
    fdot_threshold: float = 7.50
    recovery_duration: float = 5.0
    arming_force: float = 3.0
    debounce: float = 0.1
    guards_enabled: bool = True
    force_reflect_scale: float = 0.25  # scales the reflected force into the handle
    yaw_setpoint: float = 0.0

    def build(self) -> TeleopParams:
        return TeleopParams(
            v_max=np.asarray(self.v_max, float),
            p_h_max=np.asarray(self.p_h_max, float),
            fdot_threshold=self.fdot_threshold,
            recovery_duration=self.recovery_duration,
            arming_force=self.arming_force,
            debounce=self.debounce,
            guards_enabled=self.guards_enabled,
        )


@dataclass
class OperatorConfig:
    """Scripted human model: steer, grasp, pull, then react after a delay."""

    idle: bool = False
    reaction_time: float = 0.4  # s between true separation and letting go
    hand_tau: float = 0.15  # s, first-order hand force model
    pull_dir: list = field(default_factory=lambda: [-1.0, 0.0, 0.0])
    pull_force: float = 20.0  # N, exceeds the breakaway force scale
    hand_damping: float = 25.0  # N s/m while the hand is on the handle
    steer_stiffness: float = 300.0  # N/m hand servo toward the handle target
    steer_cap: float = 0.12  # m, max commanded handle deflection while steering
    guidance_gain: float = 0.6  # handle target per meter of end-effector error
    grasp_torque: float = 0.5  # N m squeeze
    grasp_ramp: float = 0.4  # s to full squeeze
    pre_grasp_hold: float = 0.3  # s stably on target before closing
    post_grasp_hold: float = 0.2  # s after capture before pulling
    waypoint_radius: float = 0.04  # m
    final_radius: float = 0.025  # m
    approach_waypoints: list = field(default_factory=list)  # world EE targets
    tremor_force: float = 0.0  # N rms, optional seeded hand noise


@dataclass
class ScenarioConfig:
    mode: str = "proposed"  # baseline: detection and recovery disabled
    duration: float = 30.0  # s
    physics_dt: float = 0.001  # s
    control_dt: float = 0.002  # s
    telemetry_hz: float = 30.0
    seed: int = 0
    arm: ArmConfig = field(default_factory=ArmConfig)
    gripper: GripperConfig = field(default_factory=GripperConfig)
    uam: UamConfig = field(default_factory=UamConfig)
    plug: PlugConfig = field(default_factory=PlugConfig)
    gains: GainsConfig = field(default_factory=GainsConfig)
    dob: DobConfig = field(default_factory=DobConfig)
    kf: KfConfig = field(default_factory=KfConfig)
    teleop: TeleopConfig = field(default_factory=TeleopConfig)
    operator: OperatorConfig = field(default_factory=OperatorConfig)

    def validate(self) -> "ScenarioConfig":
        if self.mode not in ("baseline", "proposed"):
            raise ConfigError(f"mode must be baseline or proposed, got {self.mode!r}")
        if self.physics_dt <= 0 or self.control_dt <= 0 or self.duration <= 0:
            raise ConfigError("duration and step sizes must be positive")
        if self.physics_dt > self.control_dt:
            raise ConfigError("physics step must not exceed the control period")
        ratio = self.control_dt / self.physics_dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("control period must be an integer multiple of the physics step")
        if self.telemetry_hz <= 0:
            raise ConfigError("telemetry rate must be positive")
        for name in ("kp", "kd", "kr", "m_d", "d_d", "k_fb", "k_recovery"):
            vals = getattr(self.gains, name)
            if any(v <= 0 for v in vals):
                raise ConfigError(f"gain {name} must be positive definite, got {vals}")
        for name in ("k_dg", "k_fbg", "k_tau", "momentum_gain"):
            if getattr(self.gains, name) <= 0:
                raise ConfigError(f"gain {name} must be positive")
        for nu in (self.dob.nu_default, self.dob.nu_estimation):
            if not 0.0 < nu < 1.0:
                raise ConfigError(f"dob nu must lie in (0, 1), got {nu}")
        if self.kf.q_intensity <= 0 or self.kf.r_var <= 0:
            raise ConfigError("kf noise parameters must be positive")
        try:
            self.teleop.build()
            self.plug.build()
            self.arm.build(self.uam.gravity)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, val in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, path + key + ".")
        else:
            out[key] = val
    return out


_SECTIONS = {
    "arm": ArmConfig, "gripper": GripperConfig, "uam": UamConfig, "plug": PlugConfig,
    "gains": GainsConfig, "dob": DobConfig, "kf": KfConfig, "teleop": TeleopConfig,
    "operator": OperatorConfig,
}


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_from_dict(data: dict) -> ScenarioConfig:
    merged = _merge(config_to_dict(ScenarioConfig()), data)
    kwargs = {}
    for key, val in merged.items():
        if key in _SECTIONS:
            kwargs[key] = _SECTIONS[key](**val)
        else:
            kwargs[key] = val
    return ScenarioConfig(**kwargs).validate()


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(data)


def save_config(cfg: ScenarioConfig, path: str):
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def make_variant(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Seeded scenario variation: perturbs the socket pose and the operator's
    timing/strength within realistic ranges. Seed zero returns the base."""
    if seed == 0:
        return dataclasses.replace(cfg, seed=0)
    rng = np.random.default_rng(seed)
    data = config_to_dict(cfg)
    anchor = np.asarray(cfg.plug.anchor, float) + np.concatenate(
        [rng.uniform(-0.05, 0.05, 2), rng.uniform(-0.03, 0.03, 1)]
    )
    data["plug"]["anchor"] = anchor.tolist()
    data["operator"]["reaction_time"] = float(rng.uniform(0.3, 0.5))
    data["operator"]["hand_tau"] = float(rng.uniform(0.12, 0.18))
    data["operator"]["pull_force"] = float(rng.uniform(16.0, 24.0))
    data["seed"] = seed
    return config_from_dict(data)
