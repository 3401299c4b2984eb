# ymlab/io.py
"""On-disk formats: link checkpoints (YMLF), paths (YMLP), trace CSV and JSON reports.

YMLF layout, little-endian throughout:

    "YMLF" | u32 version=1 | u32 group (0=U1, 1=SU2) | u32 dim | dim x u32 extents
    | f64 spacing | payload f64[...] | u32 crc32(payload)

The payload is the link array in site-major, direction-minor order with
the group components innermost (2 per U1 link, 4 per SU2 link).
"""
from __future__ import annotations
import csv
import dataclasses
import json
import logging
import math
import os
import struct
import tempfile
import typing
import zlib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Tuple, Type, Union

import numpy as np

from .algebra import Group
from .asymptotics import LojasiewiczFit, RateFit, RegimeReport, SimonAudit
from .cone import CylinderCheck, DensityProfile
from .errors import BadMagic, CheckpointError, CrcMismatch, TruncatedFile, VersionMismatch
from .flow import FlowOutcomeReport, FlowTrace
from .functional import SpectrumReport
from .gauge import PathConnection, StandardFormCertificate
from .lattice import AlgebraForm, Lattice, LinkField

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

CHECKPOINT_MAGIC = b"YMLF"
PATH_MAGIC = b"YMLP"
FORMAT_VERSION = 1
TRACE_HEADER = ["t", "energy", "grad_norm", "dist_ref", "dt"]


# ---------- Atomic writes ----------
def atomic_write(path: PathLike, data: Union[bytes, str]):
    """Write to a sibling temporary file, fsync, then rename over `path`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------- Checkpoints ----------
def _crc(payload: bytes) -> int:
    return zlib.crc32(payload) & 0xFFFFFFFF


def encode_checkpoint(U: LinkField) -> bytes:
    lat = U.lattice
    header = CHECKPOINT_MAGIC + struct.pack(f"<III{lat.dim}Id", FORMAT_VERSION, int(U.group), lat.dim,
                                            *lat.extent, lat.spacing)
    payload = np.ascontiguousarray(U.links, dtype="<f8").tobytes()
    return header + payload + struct.pack("<I", _crc(payload))


class _Reader:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.pos = offset

    def take(self, n: int, name: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"file ends inside {name} (need {n} bytes at offset {self.pos}, "
                                f"have {len(self.data) - self.pos})", field=name)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, name: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), name))


def _check_magic(r: _Reader, magic: bytes):
    got = r.take(4, "magic")
    if got != magic:
        raise BadMagic(f"magic {got!r} is not {magic!r}", field="magic")
    (version,) = r.unpack("<I", "version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"version {version} is not {FORMAT_VERSION}", field="version")


def _checked_payload(r: _Reader, size: int, name: str) -> bytes:
    payload = r.take(size, name)
    (crc,) = r.unpack("<I", "crc")
    if crc != _crc(payload):
        raise CrcMismatch(f"crc32 of {name} is {_crc(payload):08x}, header says {crc:08x}", field="crc")
    return payload


def decode_checkpoint(data: bytes, offset: int = 0) -> Tuple[LinkField, int]:
    """Parse one YMLF record starting at `offset`; returns the field and the offset after it."""
    r = _Reader(data, offset)
    _check_magic(r, CHECKPOINT_MAGIC)
    gid, dim = r.unpack("<II", "header")
    if gid not in (0, 1):
        raise CheckpointError(f"unknown group id {gid}", field="group_id")
    if dim < 1:
        raise CheckpointError(f"lattice dimension {dim} is not positive", field="dim")
    extent = r.unpack(f"<{dim}I", "extents")
    (spacing,) = r.unpack("<d", "spacing")
    group = Group(gid)
    lat = Lattice(dim, tuple(extent), spacing)
    shape = lat.extent + (dim, group.group_components)
    payload = _checked_payload(r, 8 * int(np.prod(shape)), "payload")
    links = np.frombuffer(payload, dtype="<f8").astype(float).reshape(shape)
    return LinkField(lat, group, links), r.pos


def write_checkpoint(U: LinkField, path: PathLike):
    atomic_write(path, encode_checkpoint(U))
    logger.debug("wrote checkpoint %s", path)


def read_checkpoint(path: PathLike) -> LinkField:
    data = Path(path).read_bytes()
    U, end = decode_checkpoint(data)
    if end != len(data):
        raise CheckpointError(f"{len(data) - end} trailing bytes after the checkpoint", field="payload")
    return U


# ---------- Paths ----------
def encode_path(path: PathConnection) -> bytes:
    parts = [PATH_MAGIC, struct.pack("<II", FORMAT_VERSION, len(path))]
    for t, U, b in zip(path.times, path.links, path.beta):
        blob = encode_checkpoint(U)
        beta = np.ascontiguousarray(b.values, dtype="<f8").tobytes()
        parts += [struct.pack("<dQ", float(t), len(blob)), blob, beta, struct.pack("<I", _crc(beta))]
    return b"".join(parts)


def write_path(path: PathConnection, dest: PathLike):
    atomic_write(dest, encode_path(path))
    logger.debug("wrote %d-frame path %s", len(path), dest)


def read_path(src: PathLike) -> PathConnection:
    data = Path(src).read_bytes()
    r = _Reader(data)
    _check_magic(r, PATH_MAGIC)
    (count,) = r.unpack("<I", "frame count")
    if count == 0:
        raise CheckpointError("path file holds no frames", field="frame count")
    times, links, betas = [], [], []
    for k in range(count):
        t, length = r.unpack("<dQ", f"frame {k} header")
        U, end = decode_checkpoint(data, r.pos)
        if end - r.pos != length:
            raise CheckpointError(f"frame {k} checkpoint is {end - r.pos} bytes, header says {length}",
                                  field="frame length")
        r.pos = end
        shape = U.lattice.form_shape(0, U.group)
        payload = _checked_payload(r, 8 * int(np.prod(shape)), f"frame {k} beta")
        times.append(t)
        links.append(U)
        betas.append(AlgebraForm(U.lattice, U.group, 0, np.frombuffer(payload, dtype="<f8").astype(float).reshape(shape)))
    return PathConnection(links[0].lattice, links[0].group, np.array(times), links, betas)


# ---------- Trace CSV ----------
def emit_trace_csv(trace: FlowTrace, path: PathLike):
    lines = [",".join(TRACE_HEADER)]
    for row in trace.rows():
        lines.append(",".join(format(float(x), ".17g") for x in row))
    atomic_write(path, "\n".join(lines) + "\n")


def read_trace_csv(path: PathLike) -> FlowTrace:
    trace = FlowTrace()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: header {header} is not {TRACE_HEADER}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(TRACE_HEADER)} columns, got {len(row)}")
            trace.append(*(float(x) for x in row))
    return trace


# ---------- JSON reports ----------
REPORT_TYPES: Dict[str, Type] = {
    cls.kind: cls
    for cls in (SpectrumReport, RegimeReport, LojasiewiczFit, RateFit, StandardFormCertificate,
                FlowOutcomeReport, DensityProfile, SimonAudit, CylinderCheck)
}


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return str(value.value).lower()
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, complex):
        return [_plain(value.real), _plain(value.imag)]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def report_to_dict(report) -> Dict[str, Any]:
    if not dataclasses.is_dataclass(report) or getattr(report, "kind", None) not in REPORT_TYPES:
        raise TypeError(f"{type(report).__name__} is not a report type")
    out: Dict[str, Any] = {"kind": report.kind}
    for f in dataclasses.fields(report):
        if f.metadata.get("json", True):
            out[f.name] = _plain(getattr(report, f.name))
    return out


def emit_report_json(report) -> str:
    return json.dumps(report_to_dict(report), indent=2, allow_nan=False) + "\n"


def _revive(hint, value):
    if value is None:
        return float("nan") if hint is float else None
    if isinstance(hint, type) and issubclass(hint, Enum):
        return hint(value)
    origin = typing.get_origin(hint)
    if origin is Union:
        enums = [a for a in typing.get_args(hint) if isinstance(a, type) and issubclass(a, Enum)]
        for e in enums:
            try:
                return e(value)
            except ValueError:
                pass
    return value


def parse_report_json(text: str):
    data = json.loads(text)
    kind = data.pop("kind", None)
    if kind not in REPORT_TYPES:
        raise ValueError(f"unknown report kind {kind!r}")
    cls = REPORT_TYPES[kind]
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _revive(hints.get(f.name), data[f.name])
    return cls(**kwargs)
