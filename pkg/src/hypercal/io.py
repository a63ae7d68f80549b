"""On-disk formats: ENVI datacubes, CSV spectra, device descriptions, maps.

Cubes use an ENVI-compatible pair — a text ``.hdr`` and a raw little-endian
``.raw`` body, band-sequential (BSQ) only — extended with the keys
``integration_time_ms`` and ``unit``. Spectra are two-column CSV files with
``#`` metadata comments. Both round-trip bit-exactly (floats are written
with ``repr``). Index maps export as plain CSV grids and 8-bit grayscale
PNGs with a fixed value range so outputs are comparable across runs.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import SerializationError
from .types import DataCube, DeviceSpec, Spectrum, WavelengthGrid

_ENVI_DTYPES = {
    1: np.dtype("<u1"),
    2: np.dtype("<i2"),
    3: np.dtype("<i4"),
    4: np.dtype("<f4"),
    5: np.dtype("<f8"),
    12: np.dtype("<u2"),
    13: np.dtype("<u4"),
}
_CUBE_SUFFIXES = {".hdr", ".raw", ".img", ".dat"}


def _cube_paths(path) -> tuple[Path, Path]:
    path = Path(path)
    base = path.with_suffix("") if path.suffix in _CUBE_SUFFIXES else path
    return base.with_suffix(".hdr"), base.with_suffix(".raw")


def write_cube(cube: DataCube, path) -> tuple[Path, Path]:
    """Write a datacube as an ENVI header/body pair; returns (hdr, raw) paths."""
    header_path, body_path = _cube_paths(path)
    wavelengths = ", ".join(repr(float(v)) for v in cube.grid.centers)
    header = (
        "ENVI\n"
        "description = {hypercal datacube}\n"
        f"samples = {cube.width}\n"
        f"lines = {cube.height}\n"
        f"bands = {cube.band_count}\n"
        "header offset = 0\n"
        "file type = ENVI Standard\n"
        "data type = 5\n"
        "interleave = bsq\n"
        "byte order = 0\n"
        "wavelength units = Nanometers\n"
        f"wavelength = {{ {wavelengths} }}\n"
        f"integration_time_ms = {repr(float(cube.integration_time))}\n"
        f"unit = {cube.unit}\n"
    )
    header_path.write_text(header)
    body = np.ascontiguousarray(cube.values.transpose(2, 0, 1), dtype="<f8")
    body_path.write_bytes(body.tobytes())
    return header_path, body_path


def _parse_header_text(text: str, source: str) -> dict:
    lines = text.splitlines()
    if not lines or lines[0].strip().upper() != "ENVI":
        raise SerializationError(f"{source}: not an ENVI header (missing ENVI magic line)")
    fields: dict[str, str] = {}
    i = 1
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if value.startswith("{") and "}" not in value:
            # brace lists may span multiple lines
            while i < len(lines) and "}" not in value:
                value += " " + lines[i].strip()
                i += 1
        fields[key] = value
    return fields


def read_cube_header(path) -> dict:
    """Parse an ENVI header into a dict with typed dimension/wavelength fields."""
    header_path, _ = _cube_paths(path)
    fields = _parse_header_text(header_path.read_text(), str(header_path))
    out: dict = {}
    try:
        out["samples"] = int(fields["samples"])
        out["lines"] = int(fields["lines"])
        out["bands"] = int(fields["bands"])
        out["data type"] = int(fields["data type"])
    except KeyError as exc:
        raise SerializationError(f"{header_path}: missing required header field {exc}") from exc
    out["interleave"] = fields.get("interleave", "bsq").lower()
    out["byte order"] = int(fields.get("byte order", "0"))
    out["header offset"] = int(fields.get("header offset", "0"))
    wl_raw = fields.get("wavelength")
    if wl_raw is None:
        raise SerializationError(f"{header_path}: missing wavelength list")
    wl_raw = wl_raw.strip().lstrip("{").rstrip("}")
    try:
        out["wavelength"] = [float(tok) for tok in wl_raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise SerializationError(f"{header_path}: malformed wavelength list") from exc
    out["integration_time_ms"] = float(fields.get("integration_time_ms", "1.0"))
    out["unit"] = fields.get("unit", "digital_counts")
    return out


def read_cube(path) -> DataCube:
    """Read an ENVI header/body pair written by :func:`write_cube`."""
    header_path, body_path = _cube_paths(path)
    header = read_cube_header(header_path)
    if header["interleave"] != "bsq":
        raise SerializationError(
            f"{header_path}: unsupported interleave {header['interleave']!r} (bsq only)"
        )
    if header["byte order"] != 0:
        raise SerializationError(f"{header_path}: unsupported byte order (little-endian only)")
    if header["data type"] not in _ENVI_DTYPES:
        raise SerializationError(f"{header_path}: unsupported data type {header['data type']}")
    if len(header["wavelength"]) != header["bands"]:
        raise SerializationError(
            f"{header_path}: {len(header['wavelength'])} wavelengths for "
            f"{header['bands']} bands"
        )
    dtype = _ENVI_DTYPES[header["data type"]]
    expected = header["samples"] * header["lines"] * header["bands"] * dtype.itemsize
    blob = body_path.read_bytes()[header["header offset"] :]
    if len(blob) != expected:
        raise SerializationError(
            f"{body_path}: body holds {len(blob)} bytes but the header implies {expected}"
        )
    bands_first = np.frombuffer(blob, dtype=dtype).reshape(
        header["bands"], header["lines"], header["samples"]
    )
    return DataCube(
        grid=WavelengthGrid(header["wavelength"]),
        values=bands_first.transpose(1, 2, 0).astype(np.float64),
        integration_time=header["integration_time_ms"],
        unit=header["unit"],
    )


def write_spectrum(spectrum: Spectrum, path) -> Path:
    """Write a spectrum as CSV with a metadata comment line."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# integration_time_ms={repr(float(spectrum.integration_time))}\n")
        writer = csv.writer(fh)
        writer.writerow(["wavelength_nm", "counts"])
        for wl, value in zip(spectrum.grid.centers, spectrum.values):
            writer.writerow([repr(float(wl)), repr(float(value))])
    return path


def read_spectrum(path) -> Spectrum:
    """Read a spectrum CSV written by :func:`write_spectrum`."""
    path = Path(path)
    integration_time = 1.0
    wavelengths: list[float] = []
    values: list[float] = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                meta = line.lstrip("#").strip()
                if meta.startswith("integration_time_ms="):
                    integration_time = float(meta.split("=", 1)[1])
                continue
            if line.lower().startswith("wavelength_nm"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise SerializationError(f"{path}:{lineno}: expected 'wavelength,counts'")
            try:
                wavelengths.append(float(parts[0]))
                values.append(float(parts[1]))
            except ValueError as exc:
                raise SerializationError(f"{path}:{lineno}: malformed number") from exc
    if not wavelengths:
        raise SerializationError(f"{path}: no spectral rows found")
    try:
        grid = WavelengthGrid(wavelengths)
    except ValueError as exc:
        raise SerializationError(f"{path}: {exc}") from exc
    return Spectrum(grid=grid, values=values, integration_time=integration_time)


# -- device descriptions ----------------------------------------------------


def write_device(device: DeviceSpec, path) -> Path:
    """Write a device description as JSON.

    A camera's per-pixel dark cube is written next to the JSON as an ENVI
    pair and referenced by relative path; 1-D dark references are inlined.
    """
    path = Path(path)
    doc = {
        "name": device.name,
        "kind": device.kind,
        "band": device.band,
        "wavelengths_nm": [float(v) for v in device.grid.centers],
        "bit_saturation": device.bit_saturation,
        "base_integration_time_ms": device.base_integration_time,
        "frame_rate_hz": device.frame_rate_hz,
    }
    if device.dark_reference.ndim == 1:
        doc["dark_reference"] = [float(v) for v in device.dark_reference]
    else:
        dark_name = path.stem + "_dark"
        dark_cube = DataCube(
            grid=device.grid,
            values=device.dark_reference,
            integration_time=device.base_integration_time,
            unit="digital_counts",
        )
        write_cube(dark_cube, path.parent / dark_name)
        doc["dark_reference"] = {"cube": dark_name + ".hdr"}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_device(path) -> DeviceSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SerializationError(f"{path}: invalid JSON: {exc}") from exc
    try:
        dark_field = doc["dark_reference"]
        if isinstance(dark_field, dict):
            dark = read_cube(path.parent / dark_field["cube"]).values
        else:
            dark = np.asarray(dark_field, dtype=np.float64)
        return DeviceSpec(
            name=doc["name"],
            kind=doc["kind"],
            band=doc["band"],
            grid=WavelengthGrid(doc["wavelengths_nm"]),
            bit_saturation=doc["bit_saturation"],
            base_integration_time=doc["base_integration_time_ms"],
            dark_reference=dark,
            frame_rate_hz=doc.get("frame_rate_hz"),
        )
    except KeyError as exc:
        raise SerializationError(f"{path}: missing device field {exc}") from exc


# -- index-map exports --------------------------------------------------------


def write_map_csv(values: np.ndarray, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(values, dtype=np.float64):
            writer.writerow([repr(float(v)) for v in row])
    return path


def read_map_csv(path) -> np.ndarray:
    rows = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([float(v) for v in row])
    if not rows:
        raise SerializationError(f"{path}: empty map")
    return np.asarray(rows, dtype=np.float64)


def write_map_png(values: np.ndarray, path, vmin: float, vmax: float) -> Path:
    """Grayscale PNG with a fixed value range (vmin -> 0, vmax -> 255)."""
    path = Path(path)
    arr = np.asarray(values, dtype=np.float64)
    if vmax <= vmin:
        raise ValueError("vmax must exceed vmin")
    scaled = np.clip((arr - vmin) / (vmax - vmin), 0.0, 1.0)
    gray = np.round(scaled * 255.0).astype(np.uint8)
    Image.fromarray(gray, mode="L").save(path)
    return path


def write_json(doc: dict, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SerializationError(f"{path}: invalid JSON: {exc}") from exc
