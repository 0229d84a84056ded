"""File formats: ``.npy`` arrays, binary graymaps, and JSON/CSV reports.

The array reader and writer handle the subset of the ``.npy`` layout this
package needs (little-endian float32/float64, C order, 2-D or time-major
3-D) and report malformed files with the byte offset at fault.
"""
import ast
import csv
import io as _io
import json
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .core import NormalizationTransform, ScalarField2D
from .exceptions import (BadMagic, FortranOrderUnsupported, InvalidRange, NonFiniteInput,
                         ShapeMismatch, TruncatedPayload, UnsupportedDtype, ValidationError)
from .metrics import AceConfig, MetricReport

MAGIC = b"\x93NUMPY"
HEADER_ALIGN = 64
SCHEMA_VERSION = "1"
_DTYPES = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


def _read_header(fh, path):
    magic = fh.read(6)
    if magic != MAGIC:
        raise BadMagic(f"{path}: not an array file (magic {magic!r})", offset=0)
    version = fh.read(2)
    if len(version) < 2:
        raise TruncatedPayload(f"{path}: header cut short", offset=6)
    major, minor = version
    if major == 1:
        raw = fh.read(2)
        fmt, start = "<H", 10
    elif major in (2, 3):
        raw = fh.read(4)
        fmt, start = "<I", 12
    else:
        raise UnsupportedDtype(f"{path}: format version {major}.{minor} not supported", offset=6)
    if len(raw) < struct.calcsize(fmt):
        raise TruncatedPayload(f"{path}: header length field cut short", offset=8)
    (hlen,) = struct.unpack(fmt, raw)
    text = fh.read(hlen)
    if len(text) < hlen:
        raise TruncatedPayload(f"{path}: header text cut short", offset=start + len(text))
    try:
        header = ast.literal_eval(text.decode("latin1"))
        descr, fortran, shape = header["descr"], header["fortran_order"], header["shape"]
    except (ValueError, SyntaxError, KeyError, TypeError):
        raise BadMagic(f"{path}: unreadable header dictionary", offset=start) from None
    if descr not in _DTYPES:
        raise UnsupportedDtype(f"{path}: element type {descr!r} not supported "
                               "(need '<f4' or '<f8')", offset=start)
    if fortran:
        raise FortranOrderUnsupported(f"{path}: Fortran-ordered arrays are not supported",
                                      offset=start)
    if not isinstance(shape, tuple) or len(shape) not in (2, 3):
        raise ShapeMismatch(f"{path}: expected a 2-D or 3-D array, got shape {shape!r}")
    return _DTYPES[descr], shape, start + hlen


def read_raw_array(path) -> np.ndarray:
    """Decode an array file to a float64 ndarray (shape ``(h, w)`` or ``(t, h, w)``)."""
    path = Path(path)
    with open(path, "rb") as fh:
        dtype, shape, data_start = _read_header(fh, path)
        count = int(np.prod(shape))
        payload = fh.read(count * dtype.itemsize)
    if len(payload) < count * dtype.itemsize:
        raise TruncatedPayload(
            f"{path}: payload has {len(payload)} bytes, expected {count * dtype.itemsize}",
            offset=data_start + len(payload))
    arr = np.frombuffer(payload, dtype=dtype).reshape(shape).astype(np.float64)
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr.ravel()))[0])
        raise NonFiniteInput(f"{path}: non-finite value at element {bad} "
                             f"(byte offset {data_start + bad * dtype.itemsize})")
    return arr


def read_array(path):
    """A 2-D file gives one :class:`ScalarField2D`; a 3-D ``(t, h, w)`` file gives a list."""
    arr = read_raw_array(path)
    if arr.ndim == 2:
        return ScalarField2D(arr)
    return [ScalarField2D(frame) for frame in arr]


def _header_bytes(shape):
    text = "{'descr': '<f4', 'fortran_order': False, 'shape': %r, }" % (tuple(shape),)
    # magic(6) + version(2) + length(2) + text + '\n' padded to the alignment
    pad = -(10 + len(text) + 1) % HEADER_ALIGN
    text = text + " " * pad + "\n"
    return MAGIC + bytes((1, 0)) + struct.pack("<H", len(text)) + text.encode("latin1")


def write_array(data, path):
    """Write a field, a list of fields, or a 2-/3-D array as C-order ``<f4``."""
    if isinstance(data, ScalarField2D):
        arr = data.values
    elif isinstance(data, (list, tuple)):
        arr = np.stack([getattr(f, "values", f) for f in data])
    else:
        arr = np.asarray(data)
    if arr.ndim not in (2, 3):
        raise ShapeMismatch(f"can only write 2-D or 3-D arrays, got shape {arr.shape}")
    with np.errstate(over="ignore"):
        narrowed = np.ascontiguousarray(arr, dtype="<f4")
    if not np.all(np.isfinite(narrowed)):
        raise NonFiniteInput("values are non-finite or overflow 4-byte floats")
    Path(path).write_bytes(_header_bytes(narrowed.shape) + narrowed.tobytes())


def graymap_bytes(values, lo, hi):
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise InvalidRange(f"graymap range needs finite lo < hi, got ({lo!r}, {hi!r})")
    values = np.asarray(getattr(values, "values", values), dtype=np.float64)
    h, w = values.shape
    scaled = np.floor((values - lo) / (hi - lo) * 255.0 + 0.5)
    pixels = np.clip(scaled, 0, 255).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def write_graymap(field, path, range):
    """Write a binary PGM, mapping ``range = (lo, hi)`` onto 0..255 (clamped, half up)."""
    lo, hi = range
    Path(path).write_bytes(graymap_bytes(field, float(lo), float(hi)))


def parse_kv_text(text, source="<config>", error=ValidationError):
    """Parse flat ``key = value`` lines (``#`` comments). Returns ``{key: (value, lineno)}``."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise error(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise error(f"{source}:{lineno}: empty key")
        out[key] = (value, lineno)
    return out


# -- reports ---------------------------------------------------------------

_CSV_COLUMNS = ["case_id", "ae", "ce", "ace", "mae", "mse", "rmse", "psnr", "ssim",
                "norm_offset", "norm_scale"]


@dataclass
class ReportDocument:
    config: AceConfig
    cases: List[MetricReport]
    # case_id -> {"ae": {"path": ..., "range": [lo, hi]}, "ce": {...}}
    maps: Dict[str, Dict[str, dict]] = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        self.cases = sorted(self.cases, key=lambda r: r.case_id)

    @property
    def aggregate(self):
        """Unweighted means over cases.

        ``ace_mean_of_cases`` averages the per-case scores; it is not the
        combination formula applied to the mean ``ae`` and ``ce``.
        """
        out = {"n_cases": len(self.cases)}
        if not self.cases:
            return out
        for name in MetricReport.SCALARS:
            key = "ace_mean_of_cases" if name == "ace" else name
            out[key] = float(np.mean([getattr(r, name) for r in self.cases]))
        return out

    def to_dict(self):
        cases = []
        for r in self.cases:
            entry = {"case_id": r.case_id}
            entry.update({k: float(v) for k, v in r.scalars().items()})
            entry["normalization"] = r.normalization.to_dict()
            if r.case_id in self.maps:
                entry["maps"] = self.maps[r.case_id]
            cases.append(entry)
        return {"schema_version": self.schema_version, "config": self.config.to_dict(),
                "cases": cases, "aggregate": self.aggregate}

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(f"unsupported report schema {d.get('schema_version')!r}")
        cases, maps = [], {}
        for entry in d["cases"]:
            norm = NormalizationTransform(**entry["normalization"])
            cases.append(MetricReport(case_id=entry["case_id"], normalization=norm,
                                      **{k: entry[k] for k in MetricReport.SCALARS}))
            if "maps" in entry:
                maps[entry["case_id"]] = entry["maps"]
        return cls(config=AceConfig.from_dict(d["config"]), cases=cases, maps=maps,
                   schema_version=d["schema_version"])

    def __eq__(self, other):
        if not isinstance(other, ReportDocument):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def dumps_report(doc: ReportDocument) -> str:
    return json.dumps(doc.to_dict(), indent=2, sort_keys=True) + "\n"


def loads_report(text) -> ReportDocument:
    return ReportDocument.from_dict(json.loads(text))


def report_csv(doc: ReportDocument) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for r in doc.cases:
        s = r.scalars()
        writer.writerow([r.case_id] + [repr(float(s[k])) for k in MetricReport.SCALARS]
                        + [repr(r.normalization.offset), repr(r.normalization.scale)])
    return buf.getvalue()


def write_report(doc: ReportDocument, path):
    """Write the JSON document to ``path`` and the per-case CSV beside it."""
    path = Path(path)
    path.write_text(dumps_report(doc), encoding="utf-8")
    csv_path = path.with_suffix(".csv")
    csv_path.write_text(report_csv(doc), encoding="utf-8")
    return path, csv_path


def read_report(path) -> ReportDocument:
    return loads_report(Path(path).read_text(encoding="utf-8"))


def map_entry(path, lo, hi, relative_to: Optional[Path] = None):
    shown = os.path.relpath(path, relative_to) if relative_to is not None else str(path)
    return {"path": Path(shown).as_posix(), "range": [float(lo), float(hi)]}
