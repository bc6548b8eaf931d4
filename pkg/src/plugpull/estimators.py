"""External-wrench and derivative estimators.

Three self-contained state machines, each advanced by exactly one caller:

* a disturbance observer recovering the external force on the UAM from the
  applied thrust input and the measured COM velocity,
* a momentum-based observer recovering the operator torque on the haptic arm,
* a per-axis constant-derivative Kalman filter producing the force-derivative
  signal the extraction detector thresholds on.
"""

from dataclasses import dataclass, field

import numpy as np

E3 = np.array([0.0, 0.0, 1.0])


@dataclass
class DobState:
    """Velocity/input filter pair for the force disturbance observer.

    ``zeta`` filters the measured COM velocity, ``chi`` filters the applied
    specific force. ``nu`` scales both filter time constants; smaller is
    faster. Initialized at the equilibrium that makes the estimate start at
    zero: ``zeta = v_c(t0)`` (a velocity, matching what the filter tracks) and
    ``chi = g_hat * e3``.
    """

    zeta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    chi: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gamma_zeta: np.ndarray = field(default_factory=lambda: np.eye(3))
    gamma_chi: np.ndarray = field(default_factory=lambda: np.eye(3))
    nu: float = 0.20
    m_hat: float = 2.50
    g_hat: float = 9.81

    def __post_init__(self):
        if not 0.0 < self.nu < 1.0:
            raise ValueError("nu must lie in (0, 1)")

    @classmethod
    def at_rest(cls, v0: np.ndarray | None = None, **kw) -> "DobState":
        s = cls(**kw)
        s.zeta = np.zeros(3) if v0 is None else np.asarray(v0, float).copy()
        s.chi = s.g_hat * E3.copy()
        return s


def dob_step(s: DobState, v_c: np.ndarray, u_c: np.ndarray, dt: float):
    """Advance the observer one step; returns (state', f_hat_world).

    ``u_c`` must be the thrust input actually applied (built from the realized
    thrust and attitude), not the commanded one, so controller/plant mismatch
    does not alias into the estimate. The estimate is world-frame; rotate by
    the body rotation transpose where a body-frame force is consumed.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    zeta_dot = -(1.0 / s.nu) * s.gamma_zeta @ (s.zeta - v_c)
    chi_dot = -(1.0 / s.nu) * s.gamma_chi @ (s.chi - u_c / s.m_hat)
    zeta = s.zeta + zeta_dot * dt
    chi = s.chi + chi_dot * dt
    f_hat = -(s.m_hat / s.nu) * s.gamma_zeta @ (zeta - v_c) + s.m_hat * s.g_hat * E3 - s.m_hat * chi
    out = DobState(zeta, chi, s.gamma_zeta, s.gamma_chi, s.nu, s.m_hat, s.g_hat)
    return out, f_hat


@dataclass
class MomentumObserverState:
    """Momentum-based external-torque observer for the haptic arm."""

    integral: np.ndarray = field(default_factory=lambda: np.zeros(4))
    tau_hat: np.ndarray = field(default_factory=lambda: np.zeros(4))
    gain: np.ndarray = field(default_factory=lambda: 30.0 * np.eye(4))
    p0: np.ndarray = field(default_factory=lambda: np.zeros(4))  # initial momentum

    @classmethod
    def from_initial(cls, M0: np.ndarray, qd0: np.ndarray, gain: np.ndarray) -> "MomentumObserverState":
        return cls(p0=np.asarray(M0, float) @ np.asarray(qd0, float), gain=np.asarray(gain, float))


def momentum_observer_step(
    s: MomentumObserverState,
    M: np.ndarray,
    C: np.ndarray,
    G: np.ndarray,
    qd: np.ndarray,
    tau: np.ndarray,
    dt: float,
):
    """Advance the observer one step; returns (state', tau_hat_ext).

    Integrates the applied-torque balance and compares it with the generalized
    momentum; the residual, scaled by the gain, is the external torque filtered
    with time constant 1/gain.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    integral = s.integral + (tau - C @ qd - G + s.tau_hat) * dt
    tau_hat = s.gain @ (M @ qd - integral - s.p0)
    return MomentumObserverState(integral, tau_hat, s.gain, s.p0), tau_hat


@dataclass
class ForceDerivativeKf:
    """Per-axis (value, derivative) Kalman filter on the force estimate.

    Process model: constant derivative driven by white noise of intensity
    ``q_intensity``; measurement of the value with variance ``r_var``. Tuned so
    a multi-newton drop within one control period spikes the derivative well
    past the detection threshold while hand-tremor-scale noise does not.
    """

    x: np.ndarray = field(default_factory=lambda: np.zeros((3, 2)))  # rows: axes
    P: np.ndarray = field(default_factory=lambda: np.tile(np.diag([1.0, 100.0]), (3, 1, 1)))
    q_intensity: float = 100.0  # N^2/s^3
    r_var: float = 0.01  # N^2


def kf_derivative_step(s: ForceDerivativeKf, f_meas: np.ndarray, dt: float):
    """Advance all three axes one step; returns (state', f_dot_hat).

    The 2x2 predict/update is written out in scalars (this runs at the control
    rate); the covariance update uses the Joseph form so it stays symmetric
    positive semidefinite.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    q00 = s.q_intensity * dt**3 / 3.0
    q01 = s.q_intensity * dt**2 / 2.0
    q11 = s.q_intensity * dt
    r = s.r_var

    x = np.empty_like(s.x)
    P = np.empty_like(s.P)
    for i in range(3):
        x0, x1 = s.x[i, 0], s.x[i, 1]
        p00, p01, p11 = s.P[i, 0, 0], s.P[i, 0, 1], s.P[i, 1, 1]
        # predict
        x0 += dt * x1
        a01 = p01 + dt * p11
        a00 = p00 + dt * p01 + dt * a01 + q00
        a01 += q01
        a11 = p11 + q11
        # update with the value measurement
        s_var = a00 + r
        k0 = a00 / s_var
        k1 = a01 / s_var
        innov = f_meas[i] - x0
        x[i, 0] = x0 + k0 * innov
        x[i, 1] = x1 + k1 * innov
        # Joseph form: (I-KH) P (I-KH)' + K r K'
        c = 1.0 - k0
        P[i, 0, 0] = c * c * a00 + k0 * k0 * r
        P[i, 0, 1] = c * (a01 - k1 * a00) + k0 * k1 * r
        P[i, 1, 0] = P[i, 0, 1]
        P[i, 1, 1] = a11 - 2.0 * k1 * a01 + k1 * k1 * a00 + k1 * k1 * r
    out = ForceDerivativeKf(x, P, s.q_intensity, s.r_var)
    return out, x[:, 1].copy()
