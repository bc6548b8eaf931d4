"""Fixed-step deterministic simulation of the coupled teleoperation loop.

Scheduling: controllers, estimators and the operator run once per control
period; their outputs are held (zero-order) while the physics integrates the
concatenated continuous state with classical RK4 at the physics step. The UAM
arm servo and the plug attachment machine advance once per physics step.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .arm import HapticArmModel, HapticArmState, _servo_accel_kernel, arm_dynamics, arm_fk
from .config import ScenarioConfig
from .controllers import (
    MIN_THRUST,
    SERVO_KD,
    SERVO_KP,
    AdmittanceGains,
    HapticSetpoint,
    UamGains,
    admittance_step,
    arm_joint_servo,
    attitude_rate_control,
    clamp_tilt,
    extract_thrust_attitude,
    gripper_compliance_step,
    position_control,
    recentering_torque,
)
from .errors import DegenerateThrust, NumericalDivergence, SingularAttitude
from .estimators import (
    DobState,
    ForceDerivativeKf,
    MomentumObserverState,
    dob_step,
    kf_derivative_step,
    momentum_observer_step,
)
from .operator import ObservedScene, OperatorState, operator_step
from .plant import (
    AttachState,
    _ee_pos_vel_kernel,
    PlugAttachment,
    UamState,
    plug_force_world,
    plug_transition,
    rate_limited_step,
    thrust_vector,
    uam_ee_position,
    uam_ee_velocity,
    JOINT_RATE_LIMIT,
)
from .spatial import rot_body
from .teleop import (
    Phase,
    PhaseState,
    RecoveryTrajectory,
    ReferenceIntegrator,
    TeleopParams,
    desired_joint_angles,
    detect_extraction,
    haptic_recovery_rate,
    integrate_reference,
    minsnap_eval,
    minsnap_solve,
    phase_step,
    update_arming,
    velocity_mapping,
)

def rk4_step(f, x: np.ndarray, t: float, h: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step of x' = f(t, x)."""
    if h <= 0:
        raise ValueError("h must be positive")
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class AppliedInputs:
    """Zero-order-held control outputs over one control period.

    The haptic servos track the held setpoints with their internal loops, so
    the setpoints (not the servo torques) are what the controller publishes.
    ``tau_arm`` is the servo torque sampled at the boundary, fed to the
    momentum observer and the log.
    """

    thrust: float
    omega_bd: np.ndarray
    theta_ad: np.ndarray
    sp_q: np.ndarray
    sp_qd: np.ndarray
    grip_d: float
    grip_rate_d: float
    tau_arm: np.ndarray
    tau_he: np.ndarray
    tau_g_op: float  # operator grip torque on the haptic gripper


@dataclass
class SimState:
    """Full coupled state between control boundaries."""

    t: float
    arm: HapticArmState
    grip_angle: float
    grip_rate: float
    uam: UamState
    attach: PlugAttachment
    dob: DobState
    kf: ForceDerivativeKf
    mom: MomentumObserverState
    setpoint: HapticSetpoint
    ref: ReferenceIntegrator
    phase: PhaseState
    traj: RecoveryTrajectory | None
    op: OperatorState
    inputs: AppliedInputs
    separation_time: float | None = None
    f_hat_w: np.ndarray = field(default_factory=lambda: np.zeros(3))
    f_dot_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tau_hat: np.ndarray = field(default_factory=lambda: np.zeros(4))
    yaw_setpoint: float = 0.0


@dataclass
class SimLog:
    """Column-oriented run log, one row per control period."""

    t: np.ndarray
    p_c: np.ndarray
    p_cd: np.ndarray
    v_c: np.ndarray
    att: np.ndarray
    q: np.ndarray
    q_d: np.ndarray
    grip: np.ndarray
    p_h: np.ndarray
    f_hat: np.ndarray
    fdot_norm: np.ndarray
    f_true: np.ndarray
    phase: list
    attach: list
    hand_force: np.ndarray  # operator diagnostics, not part of the CSV
    meta: dict


@dataclass
class SimResult:
    log: SimLog
    final: SimState
    events: dict
    wall_time: float


class Simulator:
    """Builds and advances the coupled simulation one control period at a time."""

    def __init__(self, cfg: ScenarioConfig, live: bool = False):
        cfg.validate()
        self.cfg = cfg
        self.live = live
        self.model: HapticArmModel = cfg.arm.build(cfg.uam.gravity)
        self.uam_gains: UamGains = cfg.gains.build_uam()
        self.adm_gains: AdmittanceGains = cfg.gains.build_admittance()
        self.params: TeleopParams = cfg.teleop.build()
        self.q_home = np.asarray(cfg.arm.home, float)
        self.q_lo = self.q_home - cfg.arm.travel
        self.q_hi = self.q_home + cfg.arm.travel
        self.p_h_home, _ = arm_fk(self.model, self.q_home)
        self._tool = np.asarray(cfg.uam.tool_offset, float)
        self._tool_x = float(self._tool[0])
        self._tool_z = float(self._tool[2])
        self._anchor = np.asarray(cfg.plug.anchor, float)
        self._arm_params = self.model._params
        self.n_sub = round(cfg.control_dt / cfg.physics_dt)
        self.n_ctrl = round(cfg.duration / cfg.control_dt)
        # live-mode command state (handle force N, grip torque N m, yaw rad)
        self.cmd_force = np.zeros(3)
        self.cmd_grip = 0.0
        self.last_traj: RecoveryTrajectory | None = None
        self.state = self._initial_state()

    # -- construction ------------------------------------------------------

    def _initial_state(self) -> SimState:
        cfg = self.cfg
        arm = HapticArmState(q=self.q_home.copy(), qd=np.zeros(4))
        uam = UamState(
            p_c=np.asarray(cfg.uam.start_position, float).copy(),
            v_c=np.zeros(3),
            att=np.zeros(3),
            theta_a=np.zeros(3),
            mass=cfg.uam.mass,
            gravity=cfg.uam.gravity,
        )
        M0, _, G0 = arm_dynamics(self.model, arm)
        dob = DobState.at_rest(
            v0=uam.v_c,
            gamma_zeta=np.diag(cfg.dob.gamma_zeta),
            gamma_chi=np.diag(cfg.dob.gamma_chi),
            nu=cfg.dob.nu_estimation,
            m_hat=cfg.gains.m_hat,
            g_hat=cfg.gains.g_hat,
        )
        kf = ForceDerivativeKf(q_intensity=cfg.kf.q_intensity, r_var=cfg.kf.r_var)
        mom = MomentumObserverState.from_initial(
            M0, arm.qd, cfg.gains.momentum_gain * np.eye(4)
        )
        setpoint = HapticSetpoint(
            q_d=self.q_home.copy(),
            qd_d=np.zeros(4),
            grip_d=cfg.gripper.open_angle,
            grip_rate_d=0.0,
        )
        ref = ReferenceIntegrator(p_cd=uam.p_c.copy())
        # consistent hover start: thrust balances gravity, servo holds the arm
        inputs = AppliedInputs(
            thrust=cfg.gains.m_hat * cfg.gains.g_hat,
            omega_bd=np.zeros(3),
            theta_ad=np.zeros(3),
            sp_q=self.q_home.copy(),
            sp_qd=np.zeros(4),
            grip_d=cfg.gripper.open_angle,
            grip_rate_d=0.0,
            tau_arm=G0.copy(),
            tau_he=np.zeros(4),
            tau_g_op=0.0,
        )
        return SimState(
            t=0.0,
            arm=arm,
            grip_angle=cfg.gripper.open_angle,
            grip_rate=0.0,
            uam=uam,
            attach=cfg.plug.build(),
            dob=dob,
            kf=kf,
            mom=mom,
            setpoint=setpoint,
            ref=ref,
            phase=PhaseState(),
            traj=None,
            op=OperatorState.initial(cfg.operator, cfg.seed),
            inputs=inputs,
            yaw_setpoint=cfg.teleop.yaw_setpoint,
        )

    def reset(self):
        self.cmd_force = np.zeros(3)
        self.cmd_grip = 0.0
        self.state = self._initial_state()

    # -- one control period ------------------------------------------------

    def control_update(self) -> dict:
        """Run estimators, operator, phase logic and controllers at the current
        boundary; stores fresh applied inputs and returns the log row."""
        cfg = self.cfg
        s = self.state
        dt = cfg.control_dt
        t = s.t
        q, qd = s.arm.q, s.arm.qd
        uam = s.uam
        rb = rot_body(uam.att)

        M, C, G = arm_dynamics(self.model, s.arm)

        # estimators consume the inputs actually applied over the last period
        u_applied = thrust_vector(s.inputs.thrust, uam.att)
        s.dob, f_hat_w = dob_step(s.dob, uam.v_c, u_applied, dt)
        s.kf, f_dot_hat = kf_derivative_step(s.kf, f_hat_w, dt)
        s.mom, tau_hat = momentum_observer_step(s.mom, M, C, G, qd, s.inputs.tau_arm, dt)
        s.f_hat_w, s.f_dot_hat, s.tau_hat = f_hat_w, f_dot_hat, tau_hat

        # operator (scripted) or live commands
        p_ee_h, jac = arm_fk(self.model, q)
        p_h = p_ee_h - self.p_h_home
        v_h = jac @ qd
        ee_pos, ee_vel = _ee_pos_vel_kernel(
            uam.p_c, uam.v_c, uam.att, uam.theta_a, s.inputs.omega_bd, self._tool
        )
        if self.live:
            tau_he = jac.T @ self.cmd_force
            tau_g_op = self.cmd_grip
        else:
            scene = ObservedScene(
                p_h=p_h,
                v_h=v_h,
                jac=jac,
                ee_world=ee_pos,
                anchor=self._anchor,
                attach=s.attach.state,
                separation_time=s.separation_time,
            )
            s.op, tau_he, tau_g_op = operator_step(cfg.operator, s.op, scene, t, dt)

        # phase machine (the baseline mode never leaves nominal flight)
        grip_closed_uam = uam.theta_a[2] >= cfg.gripper.uam_closed_threshold
        s.phase = update_arming(self.params, s.phase, f_hat_w, grip_closed_uam, t)
        detection = cfg.mode == "proposed" and detect_extraction(
            self.params, s.phase, f_dot_hat, f_hat_w, grip_closed_uam, t
        )
        prev_phase = s.phase.phase
        s.phase = phase_step(self.params, s.phase, detection, t, uam.p_c, uam.v_c, s.grip_angle)
        if s.phase.phase is Phase.RECOVERY and prev_phase is Phase.NOMINAL:
            s.traj = minsnap_solve(s.phase.p_e, s.phase.v_e, s.phase.t_e, self.params.recovery_duration)
            self.last_traj = s.traj
        elif s.phase.phase is Phase.NOMINAL and prev_phase is Phase.RECOVERY:
            # re-anchor so re-entry into teleoperation cannot jump
            s.ref.reanchor(uam.p_c)
            s.setpoint = HapticSetpoint(
                q_d=q.copy(), qd_d=np.zeros(4), grip_d=s.grip_angle, grip_rate_d=0.0
            )
            s.traj = None

        # references
        if s.phase.phase is Phase.NOMINAL:
            v_body = velocity_mapping(self.params, p_h)
            p_cd, v_cd = integrate_reference(s.ref, v_body, uam.att[2], dt)
        else:
            t_eval = min(t, s.phase.t_e + s.traj.duration)
            p_cd, v_cd = minsnap_eval(s.traj, t_eval)

        # UAM control
        f_hat_b = rb.T @ f_hat_w
        u_cd = position_control(self.uam_gains, uam.p_c, uam.v_c, p_cd, v_cd, f_hat_b, rb)
        try:
            thrust, roll_d, pitch_d = extract_thrust_attitude(u_cd, uam.att)
        except DegenerateThrust:
            # infeasible transient demand: idle the rotors and hold attitude
            thrust, roll_d, pitch_d = MIN_THRUST, uam.att[0], uam.att[1]
        att_d = np.array([clamp_tilt(roll_d), clamp_tilt(pitch_d), s.yaw_setpoint])
        omega_bd = attitude_rate_control(self.uam_gains, att_d, uam.att)
        grip_cmd = s.grip_angle if s.phase.phase is Phase.NOMINAL else s.phase.frozen_grip
        theta_ad = desired_joint_angles(uam.att, grip_cmd)

        # haptic control
        if s.phase.phase is Phase.NOMINAL:
            tau_fb = recentering_torque(self.adm_gains, q, self.q_home)
            s.setpoint = admittance_step(
                self.adm_gains, s.setpoint, tau_hat, tau_fb, jac,
                cfg.teleop.force_reflect_scale * f_hat_b, dt,
            )
            grip_d, grip_rate_d = gripper_compliance_step(
                self.adm_gains, s.setpoint.grip_d, s.setpoint.grip_rate_d,
                s.grip_angle, cfg.gripper.open_angle, tau_g_op, dt,
            )
            s.setpoint.grip_d, s.setpoint.grip_rate_d = grip_d, grip_rate_d
        else:
            qd_d = haptic_recovery_rate(self.adm_gains.k_recovery, q, self.q_home)
            s.setpoint = HapticSetpoint(
                q_d=s.setpoint.q_d + qd_d * dt,
                qd_d=qd_d,
                grip_d=s.setpoint.grip_d,
                grip_rate_d=0.0,
            )
        # setpoints respect the physical travel stops
        s.setpoint.q_d = np.clip(s.setpoint.q_d, self.q_lo, self.q_hi)
        tau_arm = arm_joint_servo(q, qd, s.setpoint, G)

        s.inputs = AppliedInputs(
            thrust=thrust,
            omega_bd=omega_bd,
            theta_ad=theta_ad,
            sp_q=s.setpoint.q_d.copy(),
            sp_qd=s.setpoint.qd_d.copy(),
            grip_d=s.setpoint.grip_d,
            grip_rate_d=s.setpoint.grip_rate_d,
            tau_arm=tau_arm,
            tau_he=tau_he,
            tau_g_op=tau_g_op,
        )

        f_true_w = plug_force_world(s.attach, ee_pos, ee_vel, t)
        return {
            "t": t,
            "p_c": uam.p_c.copy(),
            "p_cd": p_cd.copy(),
            "v_c": uam.v_c.copy(),
            "att": uam.att.copy(),
            "q": q.copy(),
            "q_d": s.setpoint.q_d.copy(),
            "grip": s.grip_angle,
            "p_h": p_h.copy(),
            "f_hat": f_hat_w.copy(),
            "fdot_norm": float(np.linalg.norm(f_dot_hat)),
            "f_true": f_true_w.copy(),
            "phase": s.phase.phase.value,
            "attach": s.attach.state.value,
            "hand_force": (s.op.hand_force.copy() if not self.live else self.cmd_force.copy()),
        }

    # -- physics -----------------------------------------------------------

    def _pack(self) -> np.ndarray:
        s = self.state
        x = np.empty(19)
        x[0:4] = s.arm.q
        x[4:8] = s.arm.qd
        x[8] = s.grip_angle
        x[9] = s.grip_rate
        x[10:13] = s.uam.p_c
        x[13:16] = s.uam.v_c
        x[16:19] = s.uam.att
        return x

    def _unpack(self, x: np.ndarray):
        s = self.state
        s.arm.q = x[0:4].copy()
        s.arm.qd = x[4:8].copy()
        s.grip_angle = float(x[8])
        s.grip_rate = float(x[9])
        s.uam.p_c = x[10:13].copy()
        s.uam.v_c = x[13:16].copy()
        s.uam.att = x[16:19].copy()

    def _derivative(self, t: float, x: np.ndarray) -> np.ndarray:
        """Time derivative of the concatenated continuous state.

        Trigonometry and 3-vector work are written out in scalars: this runs
        four times per physics step and dominates the wall time.
        """
        cfg = self.cfg
        s = self.state
        inp = s.inputs
        l, mu, jr, g = self._arm_params

        qdd = _servo_accel_kernel(
            l, mu, jr, g, x[0:4], x[4:8], inp.sp_q, inp.sp_qd,
            SERVO_KP, SERVO_KD, inp.tau_he,
        )
        grip_acc = (
            -cfg.gripper.servo_kp * (x[8] - inp.grip_d)
            - cfg.gripper.servo_kd * (x[9] - inp.grip_rate_d)
            + inp.tau_g_op
        ) / cfg.gripper.inertia

        roll, pitch, yaw = x[16], x[17], x[18]
        sr, cr = math.sin(roll), math.cos(roll)
        sp, cp = math.sin(pitch), math.cos(pitch)
        if abs(cp) < 1e-3:
            raise SingularAttitude(f"pitch {pitch:.4f} rad at the kinematic singularity")
        sy, cy = math.sin(yaw), math.cos(yaw)
        # body-to-world rotation, written out
        r00 = cy * cp; r01 = cy * sp * sr - sy * cr; r02 = cy * sp * cr + sy * sr
        r10 = sy * cp; r11 = sy * sp * sr + cy * cr; r12 = sy * sp * cr - cy * sr
        r20 = -sp;     r21 = cp * sr;               r22 = cp * cr

        # interaction force at the frozen attachment state (world frame)
        attach = s.attach
        fx = fy = fz = 0.0
        if attach.state is AttachState.GRASPED:
            ta1, ta2 = s.uam.theta_a[0], s.uam.theta_a[1]
            tx, tz = self._tool_x, self._tool_z
            u = tx * math.cos(ta2) + tz * math.sin(ta2)
            w = -tx * math.sin(ta2) + tz * math.cos(ta2)
            rl0, rl1, rl2 = u, -math.sin(ta1) * w, math.cos(ta1) * w
            ex = x[10] + r00 * rl0 + r01 * rl1 + r02 * rl2
            ey = x[11] + r10 * rl0 + r11 * rl1 + r12 * rl2
            ez = x[12] + r20 * rl0 + r21 * rl1 + r22 * rl2
            ox, oy, oz = inp.omega_bd
            wx = oy * rl2 - oz * rl1
            wy = oz * rl0 - ox * rl2
            wz = ox * rl1 - oy * rl0
            vex = x[13] + r00 * wx + r01 * wy + r02 * wz
            vey = x[14] + r10 * wx + r11 * wy + r12 * wz
            vez = x[15] + r20 * wx + r21 * wy + r22 * wz
            ks, ds = attach.stiffness, attach.damping
            ax, ay, az = attach.anchor
            fx = -ks * (ex - ax) - ds * vex
            fy = -ks * (ey - ay) - ds * vey
            fz = -ks * (ez - az) - ds * vez
        elif attach.state is AttachState.EXTRACTED:
            decay = math.exp(-(t - attach.release_time) / attach.release_tau)
            fx, fy, fz = attach.release_force * decay

        # thrust input: F * psi(yaw) @ (cr*sp, sr, cr*cp)
        b0, b1, b2 = cr * sp, sr, cr * cp
        F = inp.thrust
        ux = F * (cy * b0 + sy * b1)
        uy = F * (sy * b0 - cy * b1)
        uz = F * b2

        inv_m = 1.0 / cfg.uam.mass
        om_p, om_q, om_r = inp.omega_bd
        tp = sp / cp

        dx = np.empty(19)
        dx[0:4] = x[4:8]
        dx[4:8] = qdd
        dx[8] = x[9]
        dx[9] = grip_acc
        dx[10] = x[13]
        dx[11] = x[14]
        dx[12] = x[15]
        dx[13] = (ux + fx) * inv_m
        dx[14] = (uy + fy) * inv_m
        dx[15] = -cfg.uam.gravity + (uz + fz) * inv_m
        dx[16] = om_p + sr * tp * om_q + cr * tp * om_r
        dx[17] = cr * om_q - sr * om_r
        dx[18] = (sr * om_q + cr * om_r) / cp
        return dx

    def physics_step(self):
        """Advance one physics step: RK4 on the smooth state, then the joint
        stops, the rate-limited UAM servo, and the attachment machine."""
        cfg = self.cfg
        s = self.state
        h = cfg.physics_dt
        x = rk4_step(self._derivative, self._pack(), s.t, h)

        # haptic joint travel stops: clamp and kill outward velocity
        ql = np.clip(x[0:4], self.q_lo, self.q_hi)
        hit_lo = x[0:4] < self.q_lo
        hit_hi = x[0:4] > self.q_hi
        x[0:4] = ql
        x[4:8] = np.where(hit_lo, np.maximum(x[4:8], 0.0), x[4:8])
        x[4:8] = np.where(hit_hi, np.minimum(x[4:8], 0.0), x[4:8])
        # gripper travel
        if x[8] < cfg.gripper.open_angle:
            x[8] = cfg.gripper.open_angle
            x[9] = max(x[9], 0.0)
        elif x[8] > cfg.gripper.closed_angle:
            x[8] = cfg.gripper.closed_angle
            x[9] = min(x[9], 0.0)

        self._unpack(x)
        s.t += h
        s.uam.theta_a = rate_limited_step(s.uam.theta_a, s.inputs.theta_ad, JOINT_RATE_LIMIT, h)

        grip_closed = s.uam.theta_a[2] >= cfg.gripper.uam_closed_threshold
        p_ee, v_ee = _ee_pos_vel_kernel(
            s.uam.p_c, s.uam.v_c, s.uam.att, s.uam.theta_a, s.inputs.omega_bd, self._tool
        )
        prev = s.attach.state
        s.attach = plug_transition(s.attach, p_ee, v_ee, grip_closed, s.t)
        if s.attach.state is AttachState.EXTRACTED and prev is AttachState.GRASPED:
            s.separation_time = s.t

    def step_control_period(self, physics_probe=None) -> dict:
        """One full control period: control update then physics substeps."""
        row = self.control_update()
        for _ in range(self.n_sub):
            self.physics_step()
            if physics_probe is not None:
                physics_probe(self.state.t, self.state.inputs)
        s = self.state
        pc, qd = s.uam.p_c, s.arm.qd
        if pc @ pc > 1.0e4 or qd @ qd > 1.0e4:
            raise NumericalDivergence(f"state left sanity bounds at t = {s.t:.3f} s")
        return row


def run_scenario(cfg: ScenarioConfig, physics_probe=None) -> SimResult:
    """Execute the full scenario and return the log.

    ``physics_probe(t, inputs)`` is an optional hook called after every physics
    step, used by tests to verify the zero-order hold of the control outputs.
    """
    t0 = time.perf_counter()
    sim = Simulator(cfg)
    rows = [sim.step_control_period(physics_probe) for _ in range(sim.n_ctrl)]
    wall = time.perf_counter() - t0

    log = SimLog(
        t=np.array([r["t"] for r in rows]),
        p_c=np.array([r["p_c"] for r in rows]),
        p_cd=np.array([r["p_cd"] for r in rows]),
        v_c=np.array([r["v_c"] for r in rows]),
        att=np.array([r["att"] for r in rows]),
        q=np.array([r["q"] for r in rows]),
        q_d=np.array([r["q_d"] for r in rows]),
        grip=np.array([r["grip"] for r in rows]),
        p_h=np.array([r["p_h"] for r in rows]),
        f_hat=np.array([r["f_hat"] for r in rows]),
        fdot_norm=np.array([r["fdot_norm"] for r in rows]),
        f_true=np.array([r["f_true"] for r in rows]),
        phase=[r["phase"] for r in rows],
        attach=[r["attach"] for r in rows],
        hand_force=np.array([r["hand_force"] for r in rows]),
        meta={
            "mode": cfg.mode,
            "control_dt": cfg.control_dt,
            "recovery_duration": cfg.teleop.recovery_duration,
            "seed": cfg.seed,
        },
    )
    events = {
        "separation_time": sim.state.separation_time,
        "t_e": sim.state.phase.t_e if sim.state.phase.t_e > 0 else None,
        "trajectory": sim.last_traj,
    }
    return SimResult(log=log, final=sim.state, events=events, wall_time=wall)
