"""File formats: one-line JSON header + little-endian binary payload.

Every format is lossless for complex128 data: the header carries the
lattice description (floats survive JSON round-trips exactly in Python),
the payload is the raw row-major complex128 buffer. Writers emit the
header with a fixed key order and compact separators, so
write -> read -> write reproduces files byte for byte. Direction grids
are stored as their constructor arguments and rebuilt on load, keeping
the antipodal index maps bit-exact.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import DataError
from .forward import RayData
from .grids import (GridSpec, ScalarField, Sinogram, SphereGrid,
                    make_circle_grid, make_sphere_grid)

_MAGIC_DTYPE = "c128"


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and complex values for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        return c.real if c.imag == 0.0 else [c.real, c.imag]
    return obj


def _dump_header(header: dict) -> bytes:
    return (json.dumps(jsonable(header), separators=(",", ":"))
            + "\n").encode("utf-8")


def _write(path: str, header: dict, payload: bytes):
    with open(path, "wb") as fh:
        fh.write(_dump_header(header))
        fh.write(payload)


def _read(path: str):
    try:
        with open(path, "rb") as fh:
            line = fh.readline()
            payload = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed header ({exc})") from exc
    if not isinstance(header, dict):
        raise DataError(f"{path}: header is not a JSON object")
    return header, payload


def _payload_array(path, header, payload, count):
    if header.get("dtype") != _MAGIC_DTYPE:
        raise DataError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    expect = count * 16
    if len(payload) != expect:
        raise DataError(f"{path}: payload holds {len(payload)} bytes, "
                        f"expected {expect}")
    return np.frombuffer(payload, dtype="<c16").astype(np.complex128)


# ---------------------------------------------------------------------------
# fields

def save_field(path: str, field: ScalarField):
    header = {"dim": field.dim, "shape": list(field.shape),
              "spacing": list(field.spacing), "origin": list(field.origin),
              "dtype": _MAGIC_DTYPE, "meta": field.meta}
    _write(path, header, field.values.astype("<c16").tobytes())


def load_field(path: str) -> ScalarField:
    header, payload = _read(path)
    try:
        spec = GridSpec(int(header["dim"]), tuple(header["shape"]),
                        tuple(header["spacing"]), tuple(header["origin"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad field header ({exc})") from exc
    values = _payload_array(path, header, payload,
                            int(np.prod(spec.shape)))
    return ScalarField(spec, values.reshape(spec.shape),
                       header.get("meta", {}))


# ---------------------------------------------------------------------------
# direction grids

def sphere_header(sphere: SphereGrid) -> dict:
    info = sphere.info
    kind = info.get("kind")
    if kind == "circle":
        return {"kind": "circle", "count": info["count"]}
    if kind == "sphere":
        return {"kind": "sphere", "polar_count": info["polar_count"],
                "azimuth_count": info["azimuth_count"]}
    raise DataError("only constructor-built direction grids are serializable")


def sphere_from_header(header: dict) -> SphereGrid:
    kind = header.get("kind")
    if kind == "circle":
        return make_circle_grid(int(header["count"]))
    if kind == "sphere":
        return make_sphere_grid(int(header["polar_count"]),
                                int(header["azimuth_count"]))
    raise DataError(f"unknown direction grid kind {kind!r}")


# ---------------------------------------------------------------------------
# sinograms

def save_sinogram(path: str, sino: Sinogram):
    header = {"s_count": sino.s_count, "s_min": sino.s_min,
              "s_step": sino.s_step, "sphere": sphere_header(sino.directions),
              "dtype": _MAGIC_DTYPE, "meta": sino.meta}
    _write(path, header, sino.values.astype("<c16").tobytes())


def load_sinogram(path: str) -> Sinogram:
    header, payload = _read(path)
    try:
        dirs = sphere_from_header(header["sphere"])
        s_count = int(header["s_count"])
        sino = Sinogram.zeros(dirs, -float(header["s_min"]), s_count)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad sinogram header ({exc})") from exc
    if abs(sino.s_step - float(header["s_step"])) > 1e-12 * sino.s_step:
        raise DataError(f"{path}: inconsistent offset step in header")
    values = _payload_array(path, header, payload, dirs.count * s_count)
    return sino.with_values(values.reshape(dirs.count, s_count),
                            header.get("meta", {}))


# ---------------------------------------------------------------------------
# ray data

def save_rays(path: str, rays: RayData):
    header = {"eta": rays.eta.tolist(),
              "slice_offsets": rays.slice_offsets.tolist(),
              "alpha_count": len(rays.directions),
              "directions": rays.directions.tolist(),
              "u_offsets": rays.u_offsets.tolist(),
              "noise_sigma": rays.noise_sigma, "seed": rays.seed,
              "dtype": _MAGIC_DTYPE, "meta": rays.meta}
    _write(path, header, rays.values.astype("<c16").tobytes())


def load_rays(path: str) -> RayData:
    header, payload = _read(path)
    try:
        eta = np.array(header["eta"], dtype=np.float64)
        slices = np.array(header["slice_offsets"], dtype=np.float64)
        dirs = np.array(header["directions"], dtype=np.float64)
        u_off = np.array(header["u_offsets"], dtype=np.float64)
        sigma = header.get("noise_sigma")
        seed = header.get("seed")
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad ray header ({exc})") from exc
    count = len(slices) * len(dirs) * len(u_off)
    values = _payload_array(path, header, payload, count)
    return RayData(eta, slices, dirs, u_off,
                   values.reshape(len(slices), len(dirs), len(u_off)),
                   None if sigma is None else float(sigma),
                   None if seed is None else int(seed),
                   header.get("meta", {}))


# ---------------------------------------------------------------------------
# reports, images, profiles

def save_json(path: str, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(jsonable(obj), fh, indent=2)
        fh.write("\n")


def load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON ({exc})") from exc


def save_pgm(path: str, field: ScalarField, meta: dict | None = None):
    """8-bit PGM of the real part (central plane in 3D), linear min-max
    scaling recorded in a JSON sidecar next to the image."""
    vals = field.values.real
    if field.dim == 3:
        vals = vals[:, :, field.shape[2] // 2]
    lo = float(vals.min())
    hi = float(vals.max())
    if hi > lo:
        img = np.round(255.0 * (vals - lo) / (hi - lo)).astype(np.uint8)
    else:
        img = np.zeros(vals.shape, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    sidecar = {"min": lo, "max": hi, "shape": list(vals.shape),
               "scaling": "linear", "meta": meta or {}}
    save_json(path + ".json", sidecar)


def save_profiles(path: str, field: ScalarField):
    """CSV center-line profiles along each axis through the grid center."""
    center = [n // 2 for n in field.shape]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("axis,coordinate,real,imag\n")
        for axis in range(field.dim):
            coords = field.spec.axis_coords(axis)
            idx = list(center)
            for i in range(field.shape[axis]):
                idx[axis] = i
                v = field.values[tuple(idx)]
                fh.write(f"{axis},{float(coords[i])!r},"
                         f"{float(v.real)!r},{float(v.imag)!r}\n")


def load_weight_spec(source: str) -> dict:
    """Weight specification from an inline JSON object or a JSON file."""
    text = source.strip()
    if text.startswith("{"):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"inline weight spec is malformed ({exc})") from exc
    else:
        spec = load_json(source)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise DataError("weight spec must be a JSON object with a 'kind'")
    return spec


def default_sibling(path: str, suffix: str) -> str:
    stem, _ext = os.path.splitext(path)
    return stem + suffix
