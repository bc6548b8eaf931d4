"""Wire formats for the live bridge: telemetry frames out, command frames in.

Encoding is canonical: fixed field order, numbers at 6 significant digits, so
encode -> decode -> encode is byte-identical (see docs/protocol.md).
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

COMMAND_KINDS = ("handle_wrench", "grip_torque", "yaw_setpoint", "reset")


@dataclass
class TelemetryFrame:
    t: float
    pc: np.ndarray
    pcd: np.ndarray
    fhat: np.ndarray
    fdot_norm: float
    phase: str
    thetaH: np.ndarray
    thetag: float
    attach: str

    @classmethod
    def from_row(cls, row: dict) -> "TelemetryFrame":
        return cls(
            t=row["t"],
            pc=row["p_c"],
            pcd=row["p_cd"],
            fhat=row["f_hat"],
            fdot_norm=row["fdot_norm"],
            phase=row["phase"],
            thetaH=row["q"],
            thetag=row["grip"],
            attach=row["attach"],
        )


def _num(v: float) -> str:
    return f"{float(v):.6g}"


def _vec(v) -> str:
    return "[" + ",".join(_num(x) for x in v) + "]"


def encode_telemetry(frame: TelemetryFrame) -> str:
    """Canonical JSON text for one frame."""
    return (
        "{"
        f'"t":{_num(frame.t)},'
        f'"pc":{_vec(frame.pc)},'
        f'"pcd":{_vec(frame.pcd)},'
        f'"fhat":{_vec(frame.fhat)},'
        f'"fdot_norm":{_num(frame.fdot_norm)},'
        f'"phase":"{frame.phase}",'
        f'"thetaH":{_vec(frame.thetaH)},'
        f'"thetag":{_num(frame.thetag)},'
        f'"attach":"{frame.attach}"'
        "}"
    )


def decode_telemetry(text: str) -> TelemetryFrame:
    data = json.loads(text)
    return TelemetryFrame(
        t=float(data["t"]),
        pc=np.asarray(data["pc"], float),
        pcd=np.asarray(data["pcd"], float),
        fhat=np.asarray(data["fhat"], float),
        fdot_norm=float(data["fdot_norm"]),
        phase=str(data["phase"]),
        thetaH=np.asarray(data["thetaH"], float),
        thetag=float(data["thetag"]),
        attach=str(data["attach"]),
    )


@dataclass
class CommandFrame:
    kind: str
    payload: list = field(default_factory=list)


class CommandError(ValueError):
    """Rejected command frame; the reply text explains why."""


_PAYLOAD_LEN = {"handle_wrench": 3, "grip_torque": 1, "yaw_setpoint": 1, "reset": 0}


def decode_command(text: str) -> CommandFrame:
    """Parse and validate a client command; raises CommandError on bad input."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CommandError("malformed JSON") from exc
    if not isinstance(data, dict):
        raise CommandError("command must be an object")
    kind = data.get("kind")
    if kind not in COMMAND_KINDS:
        raise CommandError("unknown kind")
    payload = data.get("payload", [])
    if isinstance(payload, (int, float)):
        payload = [payload]
    if not isinstance(payload, list) or len(payload) != _PAYLOAD_LEN[kind]:
        raise CommandError(f"{kind} expects {_PAYLOAD_LEN[kind]} numbers")
    vals = []
    for v in payload:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise CommandError("payload must be finite numbers")
        vals.append(float(v))
    return CommandFrame(kind=kind, payload=vals)


class TelemetryDecimator:
    """Emit frames at a fixed rate from the control-period stream.

    A time accumulator rather than a fixed stride: 500 Hz does not divide
    30 Hz evenly, so strides of 16 and 17 periods alternate and the average
    rate is exact (60 s of run -> 1800 frames).
    """

    def __init__(self, rate_hz: float):
        if rate_hz <= 0:
            raise ValueError("telemetry rate must be positive")
        self.interval = 1.0 / rate_hz
        self.next_t = 0.0

    def reset(self):
        self.next_t = 0.0

    def due(self, t: float) -> bool:
        if t + 1e-12 >= self.next_t:
            self.next_t += self.interval
            return True
        return False
