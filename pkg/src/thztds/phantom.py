"""Synthetic two-class scan cubes with known ground truth.

Phantoms stand in for the (unreleased) biological dataset: each pixel
belongs to one region (background / blade / vein / gall), each region has
a piecewise-linear material, and pixels are synthesized by pushing a
common reference pulse through the single-pass transmission model.  The
shipped materials encode the qualitative findings the toolkit is tested
against: an infected/healthy refractive-index crossing at 1.6 THz for
leaves, uniformly lower n plus a 0.4 THz absorption bump for infected
roots, and wetter veins than blades in infected tissue.

Material magnitudes are synthetic and configurable; only the orderings
above are contractual.

Noise is counter-based (Philox keyed by seed, counter carrying the pixel
coordinates), so generation order never changes the output.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from numpy.random import Generator, Philox

from .cube import ScanCube
from .errors import DimensionError, FormatError, ModelError
from .optics import MaterialModel, SampleGeometry, transfer_function
from .signal import PulseTrace, forward_transform

LABELS_CSV_HEADER = "x,y,label"

REGION_KINDS = ("background", "blade", "vein", "gall")
PRESET_NAMES = (
    "leaf-healthy",
    "leaf-infected",
    "root-healthy",
    "root-infected",
    "leaf-two-class",
)

# Class-id convention used by the shipped presets.
CLASS_HEALTHY = 0
CLASS_INFECTED = 1
CLASS_BACKGROUND = 2

_PHILOX_KEY_SALT = 0x9E3779B97F4A7C15

_LEAF_F = (0.2, 1.6, 3.0)
_ROOT_F = (0.1, 0.3, 0.4, 0.5, 1.0, 2.0, 3.0)

MATERIALS = {
    "vacuum": MaterialModel((1.0,), (1.0,), (0.0,), name="vacuum"),
    "dry-tissue": MaterialModel((0.2, 3.0), (1.42, 1.38), (20.0, 40.0), name="dry-tissue"),
    "water-rich": MaterialModel((0.2, 3.0), (2.24, 2.16), (40.0, 100.0), name="water-rich"),
    # Leaf pairs cross at 1.6 THz: infected below healthy in the
    # low-frequency region, above it past the crossing.
    "leaf-healthy-blade": MaterialModel(
        _LEAF_F, (2.30, 2.14, 2.06), (12.0, 55.0, 95.0), name="leaf-healthy-blade"
    ),
    "leaf-infected-blade": MaterialModel(
        _LEAF_F, (2.20, 2.14, 2.26), (30.0, 75.0, 120.0), name="leaf-infected-blade"
    ),
    "leaf-healthy-vein": MaterialModel(
        _LEAF_F, (2.34, 2.18, 2.10), (15.0, 60.0, 100.0), name="leaf-healthy-vein"
    ),
    "leaf-infected-vein": MaterialModel(
        _LEAF_F, (2.26, 2.18, 2.30), (45.0, 90.0, 135.0), name="leaf-infected-vein"
    ),
    # Roots: infected tissue is drier (lower n everywhere) and carries a
    # local absorption bump at 0.4 THz; the healthy curve is smooth there.
    "root-healthy": MaterialModel(
        _ROOT_F,
        (2.30, 2.28, 2.27, 2.26, 2.22, 2.16, 2.12),
        (18.0, 26.0, 30.0, 34.0, 55.0, 90.0, 120.0),
        name="root-healthy",
    ),
    "root-infected": MaterialModel(
        _ROOT_F,
        (1.50, 1.48, 1.47, 1.46, 1.42, 1.36, 1.32),
        (15.0, 24.0, 60.0, 32.0, 50.0, 85.0, 115.0),
        name="root-infected",
    ),
    "root-gall": MaterialModel(
        _ROOT_F,
        (1.34, 1.32, 1.31, 1.30, 1.28, 1.24, 1.21),
        (20.0, 30.0, 75.0, 40.0, 60.0, 95.0, 125.0),
        name="root-gall",
    ),
}


@dataclass(frozen=True)
class RegionSpec:
    """One painted region: geometry kind + frame, material, thickness, class."""

    kind: str
    material: MaterialModel
    thickness_mm: float
    class_id: int
    frame: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise FormatError(f"unknown region kind {self.kind!r}")
        SampleGeometry(self.thickness_mm)  # validate
        if self.class_id < 0:
            raise FormatError("region class_id must be >= 0")
        fx0, fy0, fx1, fy1 = self.frame
        if not (0.0 <= fx0 < fx1 <= 1.0 and 0.0 <= fy0 < fy1 <= 1.0):
            raise FormatError(f"bad region frame {self.frame}")


@dataclass(frozen=True)
class PhantomSpec:
    """Everything needed to synthesize one labelled cube, seed included."""

    nx: int = 32
    ny: int = 32
    nt: int = 3072
    dt: float = 1700.0 / 20480.0  # ps; Nyquist ~ 6.02 THz
    dx_mm: float = 0.5
    pulse_center_ps: float = 24.0
    pulse_width_ps: float = 0.25
    pulse_amplitude: float = 1.0
    regions: tuple[RegionSpec, ...] = ()
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1 or self.nt < 2:
            raise FormatError("phantom grid must have nx, ny >= 1 and nt >= 2")
        if not (self.dt > 0 and self.dx_mm > 0 and self.pulse_width_ps > 0):
            raise FormatError("phantom dt, dx and pulse width must be > 0")
        if not (np.isfinite(self.pulse_amplitude) and self.pulse_amplitude >= 0):
            raise FormatError("pulse amplitude must be finite and >= 0")
        if not (np.isfinite(self.noise_std) and self.noise_std >= 0):
            raise FormatError("noise_std must be finite and >= 0")
        if not self.regions:
            raise FormatError("phantom needs at least one region")


@dataclass(frozen=True)
class LabeledCube:
    """Synthesized cube plus per-pixel class labels and the ground truth."""

    cube: ScanCube
    labels: np.ndarray
    reference: PulseTrace
    truth: tuple[RegionSpec, ...]

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64)
        if labels.shape != (self.cube.ny, self.cube.nx):
            raise DimensionError("label grid does not match cube dimensions")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)


def make_reference(spec: PhantomSpec) -> PulseTrace:
    """Differentiated-Gaussian reference pulse carrying in-band energy.

    Peaks at +amplitude one pulse width before the centre and troughs at
    -amplitude one width after; deterministic (no RNG involved).
    """
    if spec.nt < 256:
        raise FormatError("reference pulse needs nt >= 256")
    t = np.arange(spec.nt) * spec.dt
    u = (t - spec.pulse_center_ps) / spec.pulse_width_ps
    samples = -spec.pulse_amplitude * u * np.exp((1.0 - u * u) / 2.0)
    return PulseTrace(dt=spec.dt, t0=0.0, samples=samples)


def _frame_rect(frame, nx: int, ny: int) -> tuple[int, int, int, int]:
    fx0, fy0, fx1, fy1 = frame
    x0, x1 = int(round(fx0 * nx)), int(round(fx1 * nx))
    y0, y1 = int(round(fy0 * ny)), int(round(fy1 * ny))
    x0, x1 = max(x0, 0), min(x1, nx)
    y0, y1 = max(y0, 0), min(y1, ny)
    if x0 >= x1 or y0 >= y1:
        raise FormatError(f"region frame {frame} collapses on a {nx}x{ny} grid")
    return x0, y0, x1, y1


def _region_mask(region: RegionSpec, nx: int, ny: int) -> np.ndarray:
    x0, y0, x1, y1 = _frame_rect(region.frame, nx, ny)
    mask = np.zeros((ny, nx), dtype=bool)
    if region.kind in ("background", "blade"):
        mask[y0:y1, x0:x1] = True
    elif region.kind == "gall":
        yy, xx = np.mgrid[0:ny, 0:nx]
        cx, cy = (x0 + x1 - 1) / 2.0, (y0 + y1 - 1) / 2.0
        rx, ry = max((x1 - x0) / 2.0, 0.5), max((y1 - y0) / 2.0, 0.5)
        mask = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
    else:  # vein: midrib column band plus lateral rows inside the frame
        wid = max(1, (x1 - x0) // 10)
        xm0 = (x0 + x1 - wid) // 2
        mask[y0:y1, xm0 : xm0 + wid] = True
        step = max(3, (y1 - y0) // 5)
        for y in range(y0 + 2, y1, step):
            mask[y, x0:x1] = True
    return mask


def paint_regions(spec: PhantomSpec) -> np.ndarray:
    """Owner index per pixel; later regions overwrite earlier ones."""
    owner = np.full((spec.ny, spec.nx), -1, dtype=np.int64)
    for idx, region in enumerate(spec.regions):
        owner[_region_mask(region, spec.nx, spec.ny)] = idx
    if (owner < 0).any():
        raise FormatError("region masks do not partition the pixel grid")
    return owner


def _pixel_noise(seed: int, x: int, y: int, nt: int) -> np.ndarray:
    key = [seed & 0xFFFFFFFFFFFFFFFF, _PHILOX_KEY_SALT]
    gen = Generator(Philox(key=key, counter=[0, 0, y, x]))
    return gen.standard_normal(nt)


def synthesize(spec: PhantomSpec) -> LabeledCube:
    """Build the labelled cube: forward model per region, noise per pixel."""
    reference = make_reference(spec)
    ref_spec = forward_transform(reference)
    owner = paint_regions(spec)

    region_traces = []
    for region in spec.regions:
        mat = region.material
        if np.all(mat.n == 1.0) and np.all(mat.alpha == 0.0):
            region_traces.append(reference.samples)  # vacuum: exactly the reference
            continue
        if np.any(mat.n < 1.0) or np.any(mat.alpha < 0.0):
            raise ModelError(f"region material {mat.name!r} violates model invariants")
        h = transfer_function(mat, SampleGeometry(region.thickness_mm), ref_spec.frequencies)
        full = np.fft.irfft(ref_spec.bins * h, n=ref_spec.nt)
        region_traces.append(full[: spec.nt])

    data = np.empty((spec.ny, spec.nx, spec.nt))
    for y in range(spec.ny):
        for x in range(spec.nx):
            trace = region_traces[owner[y, x]]
            if spec.noise_std > 0:
                trace = trace + spec.noise_std * _pixel_noise(spec.seed, x, y, spec.nt)
            data[y, x] = trace

    labels = np.array([r.class_id for r in spec.regions], dtype=np.int64)[owner]
    cube = ScanCube(dx_mm=spec.dx_mm, dt=spec.dt, t0=0.0, data=data)
    return LabeledCube(cube=cube, labels=labels, reference=reference, truth=spec.regions)


# --- JSON (de)serialization ------------------------------------------------

def _require_keys(obj: dict, allowed: set[str], context: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise FormatError(f"unknown keys in {context}: {sorted(unknown)}")


def material_to_dict(mat: MaterialModel) -> dict:
    return {
        "name": mat.name,
        "frequencies_thz": list(mat.frequencies),
        "n": list(mat.n),
        "alpha_cm": list(mat.alpha),
    }


def material_from_json(obj) -> MaterialModel:
    if isinstance(obj, str):
        if obj not in MATERIALS:
            raise FormatError(f"unknown material name {obj!r}")
        return MATERIALS[obj]
    if not isinstance(obj, dict):
        raise FormatError("material must be a catalog name or an object")
    _require_keys(obj, {"name", "frequencies_thz", "n", "alpha_cm"}, "material")
    try:
        return MaterialModel(
            tuple(obj["frequencies_thz"]),
            tuple(obj["n"]),
            tuple(obj["alpha_cm"]),
            name=str(obj.get("name", "")),
        )
    except KeyError as exc:
        raise FormatError(f"material object missing key {exc}") from exc


def spec_to_dict(spec: PhantomSpec) -> dict:
    return {
        "nx": spec.nx,
        "ny": spec.ny,
        "nt": spec.nt,
        "dt_ps": spec.dt,
        "dx_mm": spec.dx_mm,
        "pulse": {
            "center_ps": spec.pulse_center_ps,
            "width_ps": spec.pulse_width_ps,
            "amplitude": spec.pulse_amplitude,
        },
        "noise_std": spec.noise_std,
        "seed": spec.seed,
        "regions": [
            {
                "kind": r.kind,
                "frame": list(r.frame),
                "material": r.material.name if r.material.name in MATERIALS else material_to_dict(r.material),
                "thickness_mm": r.thickness_mm,
                "class_id": r.class_id,
            }
            for r in spec.regions
        ],
    }


def spec_from_dict(obj: dict) -> PhantomSpec:
    if not isinstance(obj, dict):
        raise FormatError("phantom spec must be a JSON object")
    _require_keys(
        obj,
        {"nx", "ny", "nt", "dt_ps", "dx_mm", "pulse", "noise_std", "seed", "regions"},
        "phantom spec",
    )
    pulse = obj.get("pulse", {})
    _require_keys(pulse, {"center_ps", "width_ps", "amplitude"}, "pulse")
    regions = []
    for rd in obj.get("regions", []):
        _require_keys(rd, {"kind", "frame", "material", "thickness_mm", "class_id"}, "region")
        try:
            regions.append(
                RegionSpec(
                    kind=rd["kind"],
                    material=material_from_json(rd["material"]),
                    thickness_mm=float(rd["thickness_mm"]),
                    class_id=int(rd["class_id"]),
                    frame=tuple(rd.get("frame", (0.0, 0.0, 1.0, 1.0))),
                )
            )
        except KeyError as exc:
            raise FormatError(f"region missing key {exc}") from exc
    defaults = PhantomSpec.__dataclass_fields__
    try:
        return PhantomSpec(
            nx=int(obj.get("nx", defaults["nx"].default)),
            ny=int(obj.get("ny", defaults["ny"].default)),
            nt=int(obj.get("nt", defaults["nt"].default)),
            dt=float(obj.get("dt_ps", defaults["dt"].default)),
            dx_mm=float(obj.get("dx_mm", defaults["dx_mm"].default)),
            pulse_center_ps=float(pulse.get("center_ps", defaults["pulse_center_ps"].default)),
            pulse_width_ps=float(pulse.get("width_ps", defaults["pulse_width_ps"].default)),
            pulse_amplitude=float(pulse.get("amplitude", defaults["pulse_amplitude"].default)),
            regions=tuple(regions),
            noise_std=float(obj.get("noise_std", 0.0)),
            seed=int(obj.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad phantom spec value: {exc}") from exc


def spec_to_json(spec: PhantomSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2)
        fh.write("\n")


def spec_from_json(path) -> PhantomSpec:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    return spec_from_dict(obj)


def load_preset(name: str, seed: int | None = None) -> PhantomSpec:
    """Load one of the shipped phantom presets, optionally reseeded."""
    if name not in PRESET_NAMES:
        raise FormatError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    text = resources.files("thztds.presets").joinpath(f"{name}.json").read_text()
    spec = spec_from_dict(json.loads(text))
    if seed is not None:
        spec = dataclasses.replace(spec, seed=seed)
    return spec


def labels_to_csv(labels: np.ndarray, path) -> None:
    labels = np.asarray(labels)
    with open(path, "w") as fh:
        fh.write(LABELS_CSV_HEADER + "\n")
        for y in range(labels.shape[0]):
            for x in range(labels.shape[1]):
                fh.write(f"{x},{y},{int(labels[y, x])}\n")


def labels_from_csv(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != LABELS_CSV_HEADER:
            raise FormatError(f"bad labels CSV header {header!r}")
        entries = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected three columns")
            entries.append(tuple(int(p) for p in parts))
    if not entries:
        raise FormatError(f"{path}: empty labels CSV")
    nx = max(e[0] for e in entries) + 1
    ny = max(e[1] for e in entries) + 1
    labels = np.full((ny, nx), -1, dtype=np.int64)
    for x, y, lab in entries:
        labels[y, x] = lab
    if (labels < 0).any():
        raise FormatError(f"{path}: labels CSV does not cover the full grid")
    return labels
