"""Raster-scanned cubes of THz traces and the per-pixel image modalities.

A cube is an (ny, nx, nt) block of float64 samples plus spatial/temporal
metadata.  Every map operation is pixel-local and deterministic; pixels
may be processed in parallel (``THZ_THREADS``) without changing results.

Binary cube format (little-endian): magic ``THZC``, version u32 = 1,
nx u32, ny u32, nt u32, dx f64 (mm), dt f64 (ps), t0 f64 (ps), then
nx*ny*nt f64 samples, y-major then x then t.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError, GatingError, NoBandError
from .optics import (
    DEFAULT_BAND,
    DEFAULT_FLOOR,
    SampleGeometry,
    extract_constants,
)
from .signal import PulseTrace, Spectrum, forward_transform, next_pow2
from .util import worker_count

CUBE_MAGIC = b"THZC"
CUBE_VERSION = 1
MAP_CSV_HEADER = "x,y,value"

GATE_STATISTICS = ("peak_to_peak", "mean_abs", "energy")


@dataclass(frozen=True)
class ScanCube:
    """Immutable raster scan: data[y, x, t]."""

    dx_mm: float
    dt: float
    t0: float
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] < 2:
            raise DimensionError("cube data must have shape (ny, nx, nt) with nt >= 2")
        if not np.all(np.isfinite(data)):
            raise FormatError("cube data contains non-finite values")
        if not (np.isfinite(self.dx_mm) and self.dx_mm > 0):
            raise FormatError("cube dx must be finite and > 0")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise FormatError("cube dt must be finite and > 0")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def ny(self) -> int:
        return self.data.shape[0]

    @property
    def nx(self) -> int:
        return self.data.shape[1]

    @property
    def nt(self) -> int:
        return self.data.shape[2]

    def trace(self, x: int, y: int) -> PulseTrace:
        return PulseTrace(dt=self.dt, t0=self.t0, samples=self.data[y, x])

    def mean_trace(self) -> PulseTrace:
        return PulseTrace(dt=self.dt, t0=self.t0, samples=self.data.mean(axis=(0, 1)))


@dataclass(frozen=True)
class ScalarMap:
    """One real value per pixel; NaN only where flagged invalid."""

    values: np.ndarray
    valid: np.ndarray
    label: str
    units: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        valid = np.array(self.valid, dtype=bool)
        if values.ndim != 2 or values.shape != valid.shape:
            raise DimensionError("map values/valid must share one 2-d shape")
        if not np.all(np.isfinite(values[valid])):
            raise FormatError("map has non-finite values flagged as valid")
        values.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    @property
    def nx(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GateRegions:
    """Four ordered half-open sample-index intervals around the pulse."""

    a1: tuple[int, int]
    a2: tuple[int, int]
    a3: tuple[int, int]
    a4: tuple[int, int]

    def __post_init__(self):
        regions = (self.a1, self.a2, self.a3, self.a4)
        for start, stop in regions:
            if not (0 <= start < stop):
                raise GatingError(f"empty or inverted gate region [{start}, {stop})")
        for (_, stop), (start, _) in zip(regions, regions[1:]):
            if stop > start:
                raise GatingError("gate regions must be ordered A1..A4")

    def region(self, name: str) -> tuple[int, int]:
        try:
            return getattr(self, name.lower())
        except AttributeError:
            raise GatingError(f"unknown gate region {name!r}") from None


def write_cube(cube: ScanCube, path) -> None:
    header = struct.pack(
        "<4sIIIIddd",
        CUBE_MAGIC,
        CUBE_VERSION,
        cube.nx,
        cube.ny,
        cube.nt,
        cube.dx_mm,
        cube.dt,
        cube.t0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(cube.data.astype("<f8").tobytes())


def read_cube(path) -> ScanCube:
    header_size = struct.calcsize("<4sIIIIddd")
    with open(path, "rb") as fh:
        header = fh.read(header_size)
        if len(header) != header_size:
            raise FormatError(f"{path}: truncated cube header")
        magic, version, nx, ny, nt, dx, dt, t0 = struct.unpack("<4sIIIIddd", header)
        if magic != CUBE_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != CUBE_VERSION:
            raise FormatError(f"{path}: unsupported cube version {version}")
        payload = fh.read(nx * ny * nt * 8)
        if len(payload) != nx * ny * nt * 8:
            raise FormatError(f"{path}: truncated cube payload")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after cube payload")
    data = np.frombuffer(payload, dtype="<f8").reshape(ny, nx, nt)
    return ScanCube(dx_mm=dx, dt=dt, t0=t0, data=data)


def derive_gates(reference_trace: PulseTrace) -> GateRegions:
    """Split the time axis into A1..A4 around the pulse peak and trough.

    A1 runs up to the earlier extremum, A2 to the zero crossing between
    the extrema, A3 past the later extremum by the width over which the
    amplitude stays above half the trough magnitude, A4 covers the rest.
    """
    s = reference_trace.samples
    nt = s.size
    tail = s[3 * nt // 4 :]
    tail_rms = float(np.sqrt(np.mean(tail**2))) if tail.size else 0.0
    peak_abs = float(np.max(np.abs(s)))
    if peak_abs <= 10.0 * tail_rms or peak_abs == 0.0:
        raise GatingError("no dominant pulse: |max| must exceed 10x trailing-quartile RMS")

    p = int(np.argmax(s))
    q = int(np.argmin(s))
    lo, hi = min(p, q), max(p, q)
    if lo < 1 or lo == hi:
        raise GatingError("pulse extrema leave an empty gate region")

    mid = None
    for i in range(lo, hi):
        if s[i] == 0.0:
            mid = i
            break
        if (s[i] > 0) != (s[i + 1] > 0):
            mid = i + 1
            break
    if mid is None or not (lo < mid <= hi):
        raise GatingError("no zero crossing between pulse peak and trough")

    half = 0.5 * abs(s[q])
    j = hi
    while j < nt and abs(s[j]) >= half:
        j += 1
    w = max(j - hi, 1)
    if hi + w >= nt:
        raise GatingError("pulse sits too close to the trace end for gating")

    return GateRegions(a1=(0, lo), a2=(lo, mid), a3=(mid, hi + w), a4=(hi + w, nt))


def gate_image(cube: ScanCube, region: tuple[int, int], statistic: str = "peak_to_peak") -> ScalarMap:
    """Per-pixel statistic over the samples of one time-gate region."""
    start, stop = region
    if not (0 <= start < stop <= cube.nt):
        raise DimensionError(f"gate region [{start}, {stop}) outside trace length {cube.nt}")
    if statistic not in GATE_STATISTICS:
        raise FormatError(f"unknown gate statistic {statistic!r}")
    seg = cube.data[:, :, start:stop]
    if statistic == "peak_to_peak":
        values = seg.max(axis=2) - seg.min(axis=2)
    elif statistic == "mean_abs":
        values = np.abs(seg).mean(axis=2)
    else:
        values = (seg**2).sum(axis=2)
    valid = np.ones(values.shape, dtype=bool)
    return ScalarMap(values=values, valid=valid, label=f"gate[{start},{stop}) {statistic}")


def _unwrap_rows(wrapped: np.ndarray) -> np.ndarray:
    jumps = np.round(np.diff(wrapped, axis=-1) / (2.0 * np.pi))
    out = wrapped.copy()
    out[..., 1:] -= 2.0 * np.pi * np.cumsum(jumps, axis=-1)
    return out


def _nearest_bin(f: float, df: float, nf: int) -> int:
    k = int(round(f / df))
    return min(max(k, 0), nf - 1)


def frequency_slice(cube: ScanCube, f: float, kind: str = "amplitude") -> ScalarMap:
    """Per-pixel spectral amplitude or unwrapped phase at the bin nearest f."""
    if kind not in ("amplitude", "phase"):
        raise FormatError(f"unknown slice kind {kind!r}")
    nyquist = 0.5 / cube.dt
    if not (0 < f <= nyquist):
        raise NoBandError(f"slice frequency {f} THz outside (0, {nyquist:.6g}]")
    n_fft = next_pow2(cube.nt)
    df = 1.0 / (n_fft * cube.dt)
    nf = n_fft // 2 + 1
    k = _nearest_bin(f, df, nf)
    realized = k * df

    flat = cube.data.reshape(-1, cube.nt)
    if kind == "amplitude":
        spectra = np.fft.rfft(flat, n=n_fft)[:, k]
        values = np.abs(spectra).reshape(cube.ny, cube.nx)
        valid = np.ones(values.shape, dtype=bool)
        return ScalarMap(values, valid, label=f"amplitude @ {realized:.6g} THz (bin {k})")

    spectra = np.fft.rfft(flat, n=n_fft)[:, : k + 1]
    magnitude_ok = np.abs(spectra[:, k]) > 0.0
    phases = _unwrap_rows(-np.angle(spectra))[:, k]
    values = np.where(magnitude_ok, phases, np.nan).reshape(cube.ny, cube.nx)
    valid = magnitude_ok.reshape(cube.ny, cube.nx)
    return ScalarMap(values, valid, label=f"phase @ {realized:.6g} THz (bin {k})", units="rad")


def constants_map(
    cube: ScanCube,
    reference: PulseTrace,
    geometry,
    f: float,
    which: str = "n",
    band: tuple[float, float] = DEFAULT_BAND,
    floor: float = DEFAULT_FLOOR,
) -> ScalarMap:
    """Per-pixel refractive index or absorption at the bin nearest f.

    ``geometry`` is a scalar thickness in mm, a SampleGeometry, or an
    (ny, nx) per-pixel thickness map (root-gall geometry).  Pixels whose
    extraction is invalid at the chosen bin are masked out.
    """
    if which not in ("n", "alpha"):
        raise FormatError(f"unknown constants-map kind {which!r}")
    if reference.nt != cube.nt:
        raise DimensionError("reference trace and cube have different lengths")
    if abs(reference.dt - cube.dt) > 1e-12 * cube.dt:
        raise DimensionError("reference trace and cube have different dt")

    thickness = _thickness_grid(geometry, cube.ny, cube.nx)
    ref_spec = forward_transform(reference)
    k = _nearest_bin(f, ref_spec.df, ref_spec.nf)
    realized = k * ref_spec.df

    flat = cube.data.reshape(-1, cube.nt)
    spectra = np.fft.rfft(flat, n=ref_spec.nt)

    def one_pixel(idx: int) -> float:
        spec = Spectrum(df=ref_spec.df, bins=spectra[idx], nt=ref_spec.nt, t0=ref_spec.t0)
        geom = SampleGeometry(thickness.flat[idx])
        try:
            oc = extract_constants(spec, ref_spec, geom, band=band, floor=floor)
        except NoBandError:
            return np.nan
        pos = np.searchsorted(oc.frequencies, realized)
        if pos >= oc.frequencies.size or oc.frequencies[pos] != realized or not oc.valid[pos]:
            return np.nan
        return float(oc.n[pos] if which == "n" else oc.alpha[pos])

    npix = cube.ny * cube.nx
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            flat_values = np.fromiter(pool.map(one_pixel, range(npix)), dtype=np.float64, count=npix)
    else:
        flat_values = np.fromiter(map(one_pixel, range(npix)), dtype=np.float64, count=npix)

    values = flat_values.reshape(cube.ny, cube.nx)
    valid = np.isfinite(values)
    units = "" if which == "n" else "1/cm"
    return ScalarMap(values, valid, label=f"{which} @ {realized:.6g} THz (bin {k})", units=units)


def _thickness_grid(geometry, ny: int, nx: int) -> np.ndarray:
    if isinstance(geometry, SampleGeometry):
        return np.full((ny, nx), geometry.thickness_mm)
    arr = np.asarray(geometry, dtype=np.float64)
    if arr.ndim == 0:
        SampleGeometry(float(arr))  # validate
        return np.full((ny, nx), float(arr))
    if arr.shape != (ny, nx):
        raise DimensionError(f"thickness map shape {arr.shape} does not match cube ({ny}, {nx})")
    for d in arr.flat:
        SampleGeometry(float(d))  # validate every pixel
    return arr


def write_map_csv(scalar_map: ScalarMap, path) -> None:
    with open(path, "w") as fh:
        fh.write(MAP_CSV_HEADER + "\n")
        for y in range(scalar_map.ny):
            for x in range(scalar_map.nx):
                v = scalar_map.values[y, x]
                fh.write(f"{x},{y},{v:.17g}\n" if scalar_map.valid[y, x] else f"{x},{y},nan\n")


def read_map_csv(path, label: str = "") -> ScalarMap:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != MAP_CSV_HEADER:
            raise FormatError(f"bad map CSV header {header!r}, expected {MAP_CSV_HEADER!r}")
        entries = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected three columns")
            try:
                entries.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if not entries:
        raise FormatError(f"{path}: empty map CSV")
    nx = max(e[0] for e in entries) + 1
    ny = max(e[1] for e in entries) + 1
    values = np.full((ny, nx), np.nan)
    for x, y, v in entries:
        values[y, x] = v
    valid = np.isfinite(values)
    return ScalarMap(values, valid, label=label or str(path))
