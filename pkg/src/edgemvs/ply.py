"""PLY point-cloud reader and writer.

Supports ascii and binary_little_endian, the two formats the pipeline
exchanges. Vertices must be the first element; coordinates may be stored as
float or double, colors as uchar. Unknown scalar vertex properties are
skipped, elements after the vertex block are ignored. The writer always
emits double-precision coordinates so that write/parse round-trips are
bit-exact.
"""

from __future__ import annotations

import math

import numpy as np

from .pointcloud import PointCloud

_SCALAR_TYPES = {
    "char": "i1",
    "int8": "i1",
    "uchar": "u1",
    "uint8": "u1",
    "short": "i2",
    "int16": "i2",
    "ushort": "u2",
    "uint16": "u2",
    "int": "i4",
    "int32": "i4",
    "uint": "u4",
    "uint32": "u4",
    "float": "f4",
    "float32": "f4",
    "double": "f8",
    "float64": "f8",
}

_COLOR_NAMES = ("red", "green", "blue")


class PlyParseError(ValueError):
    """Raised for malformed PLY input; the message names the byte or line."""


def _header_lines(data: bytes) -> tuple[list[str], int]:
    end = data.find(b"end_header")
    if end < 0:
        raise PlyParseError("missing end_header")
    nl = data.find(b"\n", end)
    if nl < 0:
        raise PlyParseError("missing newline after end_header")
    text = data[:nl].decode("ascii", errors="replace")
    return text.splitlines(), nl + 1


def parse_ply(data: bytes) -> PointCloud:
    """Parse PLY bytes into a PointCloud.

    Raises:
        PlyParseError: malformed header, unsupported format, element count
            shortfall, or a non-finite coordinate. Messages name the
            offending line (ascii) or byte offset (binary).
    """
    lines, body_start = _header_lines(data)
    if not lines or lines[0].strip() != "ply":
        raise PlyParseError("line 1: not a PLY file")

    fmt = None
    label = ""
    elements: list[tuple[str, int]] = []
    properties: list[tuple[str, str]] = []  # vertex element only
    for lineno, raw in enumerate(lines[1:], start=2):
        tokens = raw.split()
        if not tokens:
            continue
        kw = tokens[0]
        if kw == "format":
            if len(tokens) < 2 or tokens[1] not in ("ascii", "binary_little_endian"):
                raise PlyParseError(f"line {lineno}: unsupported format {raw!r}")
            fmt = tokens[1]
        elif kw == "comment":
            if len(tokens) >= 3 and tokens[1] == "label":
                label = " ".join(tokens[2:])
        elif kw == "element":
            if len(tokens) != 3:
                raise PlyParseError(f"line {lineno}: malformed element declaration")
            try:
                count = int(tokens[2])
            except ValueError:
                raise PlyParseError(f"line {lineno}: bad element count") from None
            elements.append((tokens[1], count))
        elif kw == "property":
            if not elements:
                raise PlyParseError(f"line {lineno}: property before any element")
            if elements[-1][0] != "vertex":
                continue
            if tokens[1] == "list":
                raise PlyParseError(f"line {lineno}: list property in vertex element")
            if len(tokens) != 3 or tokens[1] not in _SCALAR_TYPES:
                raise PlyParseError(f"line {lineno}: unsupported property {raw!r}")
            properties.append((tokens[2], _SCALAR_TYPES[tokens[1]]))

    if fmt is None:
        raise PlyParseError("header declares no format")
    if not elements or elements[0][0] != "vertex":
        raise PlyParseError("first element must be vertex")
    count = elements[0][1]
    names = [name for name, _ in properties]
    for coord in ("x", "y", "z"):
        if coord not in names:
            raise PlyParseError(f"vertex element lacks property {coord}")
    has_color = all(c in names for c in _COLOR_NAMES)

    if fmt == "ascii":
        table = _parse_ascii(data, body_start, count, len(properties))
        cols = {name: table[:, i] for i, (name, _) in enumerate(properties)}
    else:
        dtype = np.dtype([(name, "<" + code) for name, code in properties])
        need = count * dtype.itemsize
        if len(data) - body_start < need:
            raise PlyParseError(
                f"byte {len(data)}: vertex data ends short of "
                f"{count} declared vertices"
            )
        rec = np.frombuffer(data, dtype=dtype, count=count, offset=body_start)
        cols = {name: rec[name].astype(np.float64) for name, _ in properties}

    coords = np.stack([cols["x"], cols["y"], cols["z"]], axis=1)
    bad = np.flatnonzero(~np.isfinite(coords).all(axis=1))
    if bad.size:
        where = f"vertex {int(bad[0])}"
        raise PlyParseError(f"{where}: non-finite coordinate")

    if has_color:
        colors = np.stack([cols[c] for c in _COLOR_NAMES], axis=1)
        colors = colors.astype(np.uint8)
    else:
        colors = np.full((count, 3), 255, dtype=np.uint8)
    return PointCloud(coords=coords, colors=colors, label=label)


def _parse_ascii(data: bytes, body_start: int, count: int, width: int) -> np.ndarray:
    header_lines = data[:body_start].count(b"\n")
    rows = np.empty((count, width), dtype=np.float64)
    lines = data[body_start:].splitlines()
    filled = 0
    for offset, raw in enumerate(lines):
        if filled == count:
            break
        tokens = raw.split()
        if not tokens:
            continue
        lineno = header_lines + offset + 1
        if len(tokens) < width:
            raise PlyParseError(f"line {lineno}: expected {width} values")
        try:
            rows[filled] = [float(t) for t in tokens[:width]]
        except ValueError:
            raise PlyParseError(f"line {lineno}: non-numeric value") from None
        filled += 1
    if filled < count:
        lineno = header_lines + len(lines) + 1
        raise PlyParseError(
            f"line {lineno}: vertex data ends short of {count} declared vertices"
        )
    return rows


def write_ply(cloud: PointCloud, fmt: str = "binary_little_endian") -> bytes:
    """Serialize a PointCloud; fmt is "ascii" or "binary_little_endian"."""
    if fmt not in ("ascii", "binary_little_endian"):
        raise ValueError(f"unsupported format {fmt!r}")
    header = ["ply", f"format {fmt} 1.0"]
    if cloud.label:
        header.append(f"comment label {cloud.label}")
    header.append(f"element vertex {len(cloud)}")
    header += [f"property double {axis}" for axis in ("x", "y", "z")]
    header += [f"property uchar {c}" for c in _COLOR_NAMES]
    header.append("end_header")
    head = ("\n".join(header) + "\n").encode("ascii")

    if fmt == "ascii":
        body_lines = []
        for (x, y, z), (r, g, b) in zip(cloud.coords, cloud.colors):
            body_lines.append(
                f"{_fmt_float(x)} {_fmt_float(y)} {_fmt_float(z)} {r} {g} {b}"
            )
        body = ("\n".join(body_lines) + "\n").encode("ascii") if body_lines else b""
        return head + body

    dtype = np.dtype(
        [(n, "<f8") for n in ("x", "y", "z")] + [(n, "u1") for n in _COLOR_NAMES]
    )
    rec = np.empty(len(cloud), dtype=dtype)
    for i, axis in enumerate(("x", "y", "z")):
        rec[axis] = cloud.coords[:, i]
    for i, c in enumerate(_COLOR_NAMES):
        rec[c] = cloud.colors[:, i]
    return head + rec.tobytes()


def _fmt_float(value: float) -> str:
    # repr round-trips float64 exactly; avoid "1e+16"-style exponents breaking
    # nothing, they parse fine, but normalize integers for readability
    if math.isfinite(value) and value == int(value) and abs(value) < 1e15:
        return str(int(value)) + ".0"
    return repr(float(value))
