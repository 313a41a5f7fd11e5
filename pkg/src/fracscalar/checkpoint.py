"""Binary checkpoints (``.frsc``).

Little-endian layout::

    4s   magic "FRSC"
    u32  version (1)
    u32  n
    f64  t
    5f64 alpha, beta, chi, r, eps
    u8   drift tag
    u8   k = number of drift parameters, then k f64
    u8   forcing tag (0 logistic, 1 riesz, 2 none)
    n*n f64 samples, row-major (index [i, j], i along x1)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .drift import AGGREGATION_KERNELS, DRIFT_TAGS, DriftSpec
from .errors import FracScalarError

MAGIC = b"FRSC"
VERSION = 1
FORCING_TAGS = {"logistic": 0, "riesz": 1, "none": 2}

_HEADER = struct.Struct("<4sIId5dB")


class CheckpointError(FracScalarError):
    """Malformed or unsupported checkpoint file."""


@dataclass
class Checkpoint:
    t: float
    u: np.ndarray
    params: object  # ModelParams


def _drift_payload(spec: DriftSpec) -> list:
    if spec.variant == "ks_screened":
        return [spec.beta]
    if spec.variant == "aggregation":
        if spec.kernel_symbol is not None:
            raise CheckpointError("custom aggregation kernels cannot be written to a checkpoint")
        return [float(AGGREGATION_KERNELS[spec.kernel][0]), spec.width]
    return []


def _drift_from_payload(tag: int, payload: list) -> DriftSpec:
    names = {v: k for k, v in DRIFT_TAGS.items()}
    if tag not in names:
        raise CheckpointError(f"unknown drift tag {tag}")
    variant = names[tag]
    if variant == "ks_screened":
        return DriftSpec(variant, beta=payload[0])
    if variant == "aggregation":
        kernels = {v[0]: k for k, v in AGGREGATION_KERNELS.items()}
        return DriftSpec(variant, kernel=kernels[int(payload[0])], width=payload[1])
    return DriftSpec(variant)


def to_bytes(u: np.ndarray, t: float, params) -> bytes:
    u = np.asarray(u, dtype="<f8")
    n = u.shape[0]
    if u.shape != (n, n):
        raise CheckpointError(f"expected a square field, got {u.shape}")
    p = params
    head = _HEADER.pack(
        MAGIC, VERSION, n, float(t), p.alpha, p.beta, p.chi, p.r, p.eps_viscosity, p.drift.tag
    )
    payload = _drift_payload(p.drift)
    body = struct.pack(f"<B{len(payload)}dB", len(payload), *payload, FORCING_TAGS[p.forcing])
    return head + body + np.ascontiguousarray(u).tobytes(order="C")


def from_bytes(data: bytes) -> Checkpoint:
    try:
        return _parse(data)
    except struct.error as exc:
        raise CheckpointError(f"truncated checkpoint: {exc}") from None


def _parse(data: bytes) -> Checkpoint:
    from .evolution import ModelParams

    if len(data) < _HEADER.size or data[:4] != MAGIC:
        raise CheckpointError("not an FRSC checkpoint (bad magic)")
    magic, version, n, t, alpha, beta, chi, r, eps, tag = _HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    off = _HEADER.size
    (k,) = struct.unpack_from("<B", data, off)
    off += 1
    payload = list(struct.unpack_from(f"<{k}d", data, off))
    off += 8 * k
    (ftag,) = struct.unpack_from("<B", data, off)
    off += 1
    forcing = {v: key for key, v in FORCING_TAGS.items()}.get(ftag)
    if forcing is None:
        raise CheckpointError(f"unknown forcing tag {ftag}")
    expected = off + 8 * n * n
    if len(data) != expected:
        raise CheckpointError(f"checkpoint size {len(data)} does not match n={n} (expected {expected})")
    u = np.frombuffer(data, dtype="<f8", count=n * n, offset=off).reshape(n, n).astype(float)
    drift = _drift_from_payload(tag, payload)
    params = ModelParams(alpha=alpha, chi=chi, r=r, eps_viscosity=eps, drift=drift, forcing=forcing)
    return Checkpoint(t=t, u=u, params=params)


def write_checkpoint(path, u: np.ndarray, t: float, params) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_bytes(u, t, params))
    return path


def read_checkpoint(path) -> Checkpoint:
    return from_bytes(Path(path).read_bytes())
