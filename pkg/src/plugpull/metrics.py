"""Run metrics and the CSV log format."""

import io
from dataclasses import dataclass

import numpy as np

from .sim import SimLog

RETURN_RADIUS = 0.05  # m
RETURN_HOLD = 0.5  # s


@dataclass
class MetricsReport:
    has_separation: bool
    t_separation: float | None = None
    overshoot: float | None = None  # max distance from the separation point
    time_to_return: float | None = None  # s after separation, sustained
    peak_fdot: float = 0.0


def compute_metrics(log: SimLog) -> MetricsReport:
    """Overshoot after separation, time to return, and the derivative peak.

    Overshoot is the largest distance between the COM and its position at the
    separation instant over one recovery duration; time-to-return is the first
    time the COM stays within RETURN_RADIUS of that point for RETURN_HOLD.
    """
    peak = float(np.max(log.fdot_norm)) if len(log.fdot_norm) else 0.0
    sep_rows = [i for i, a in enumerate(log.attach) if a == "EXTRACTED"]
    if not sep_rows:
        return MetricsReport(has_separation=False, peak_fdot=peak)
    i0 = sep_rows[0]
    t_e = float(log.t[i0])
    p_e = log.p_c[i0]
    horizon = log.meta.get("recovery_duration", 5.0)
    window = (log.t >= t_e) & (log.t <= t_e + horizon)
    dist = np.linalg.norm(log.p_c - p_e, axis=1)
    overshoot = float(np.max(dist[window]))

    time_to_return = None
    dt = log.meta.get("control_dt", 0.002)
    hold_n = max(1, round(RETURN_HOLD / dt))
    inside = dist <= RETURN_RADIUS
    for i in range(i0, len(inside) - hold_n + 1):
        if inside[i : i + hold_n].all():
            time_to_return = float(log.t[i] - t_e)
            break
    return MetricsReport(
        has_separation=True,
        t_separation=t_e,
        overshoot=overshoot,
        time_to_return=time_to_return,
        peak_fdot=peak,
    )


# CSV layout: fixed column order, one row per control period, 6 significant
# digits. Vector columns are suffixed _x/_y/_z (or joint index for the arm).
_VEC3 = ("x", "y", "z")


def csv_columns() -> list:
    cols = ["t"]
    cols += [f"pc_{s}" for s in _VEC3]
    cols += [f"pcd_{s}" for s in _VEC3]
    cols += [f"vc_{s}" for s in _VEC3]
    cols += ["roll", "pitch", "yaw"]
    cols += [f"thH_{i}" for i in range(1, 5)]
    cols += [f"thHd_{i}" for i in range(1, 5)]
    cols += ["thg"]
    cols += [f"pH_{s}" for s in _VEC3]
    cols += [f"fhat_{s}" for s in _VEC3]
    cols += ["fdot_norm"]
    cols += [f"ftrue_{s}" for s in _VEC3]
    cols += ["phase", "attach"]
    return cols


def log_to_csv(log: SimLog) -> str:
    out = io.StringIO()
    out.write(",".join(csv_columns()) + "\n")
    n = len(log.t)
    for i in range(n):
        vals = [
            log.t[i],
            *log.p_c[i], *log.p_cd[i], *log.v_c[i], *log.att[i],
            *log.q[i], *log.q_d[i], log.grip[i], *log.p_h[i],
            *log.f_hat[i], log.fdot_norm[i], *log.f_true[i],
        ]
        row = ",".join(f"{v:.6g}" for v in vals)
        out.write(f"{row},{log.phase[i]},{log.attach[i]}\n")
    return out.getvalue()


def write_csv(log: SimLog, path: str):
    with open(path, "w", newline="") as fh:
        fh.write(log_to_csv(log))


def read_csv(path: str) -> SimLog:
    """Parse a run log back into column arrays (meta is not stored in the CSV
    and comes back with defaults)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        expected = csv_columns()
        if header != expected:
            raise ValueError("unrecognized log header")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    num = np.array([[float(v) for v in r[:-2]] for r in rows])
    phase = [r[-2] for r in rows]
    attach = [r[-1] for r in rows]
    c = {name: idx for idx, name in enumerate(expected)}
    t = num[:, c["t"]]
    meta = {"control_dt": float(np.median(np.diff(t))) if len(t) > 1 else 0.002}
    return SimLog(
        t=t,
        p_c=num[:, c["pc_x"] : c["pc_x"] + 3],
        p_cd=num[:, c["pcd_x"] : c["pcd_x"] + 3],
        v_c=num[:, c["vc_x"] : c["vc_x"] + 3],
        att=num[:, c["roll"] : c["roll"] + 3],
        q=num[:, c["thH_1"] : c["thH_1"] + 4],
        q_d=num[:, c["thHd_1"] : c["thHd_1"] + 4],
        grip=num[:, c["thg"]],
        p_h=num[:, c["pH_x"] : c["pH_x"] + 3],
        f_hat=num[:, c["fhat_x"] : c["fhat_x"] + 3],
        fdot_norm=num[:, c["fdot_norm"]],
        f_true=num[:, c["ftrue_x"] : c["ftrue_x"] + 3],
        phase=phase,
        attach=attach,
        hand_force=np.zeros((len(rows), 3)),
        meta=meta,
    )
