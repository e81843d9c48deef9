"""Baseline feature extraction (PCA) and shared-colormap rendering.

PCA is a mean-centred SVD with a deterministic sign convention (the
largest-magnitude entry of every component is positive).  Rendering maps
groups of scalar maps onto one joint 16-bit scale so that equal values
render identically across images; invalid pixels render as level 0 and
are reported in a sidecar mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube import ScalarMap, ScanCube
from .errors import DimensionError, FormatError, RenderError

COLORMAPS = ("grayscale", "gray", "hot")


@dataclass(frozen=True)
class PcaModel:
    """Top-k principal directions of a trace population."""

    mean: np.ndarray  # (nt,)
    components: np.ndarray  # (k, nt), rows orthonormal
    explained_variance: np.ndarray  # (k,), non-increasing

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        comps = np.asarray(self.components, dtype=np.float64)
        var = np.asarray(self.explained_variance, dtype=np.float64)
        if mean.ndim != 1 or comps.ndim != 2 or comps.shape[1] != mean.size:
            raise DimensionError("PCA mean/components shapes disagree")
        if var.shape != (comps.shape[0],):
            raise DimensionError("PCA variances must match the component count")
        if np.any(np.diff(var) > 1e-12 * max(var[0], 1.0) if var.size > 1 else [False]):
            raise FormatError("PCA explained variance must be non-increasing")
        for arr in (mean, comps, var):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "explained_variance", var)

    @property
    def k(self) -> int:
        return self.components.shape[0]


def pca_fit(traces, k: int) -> PcaModel:
    """Mean-centred SVD; components are the top-k right singular directions."""
    x = np.asarray(traces, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DimensionError("PCA needs a (m, nt) matrix with m >= 2")
    m, nt = x.shape
    if not (1 <= k <= min(m, nt)):
        raise DimensionError(f"component count {k} outside [1, {min(m, nt)}]")
    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:k].copy()
    var = (s[:k] ** 2) / (m - 1)
    # Sign convention: largest-magnitude entry of each component is positive.
    for row in comps:
        peak = np.argmax(np.abs(row))
        if row[peak] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=comps, explained_variance=var)


def pca_scores(traces, model: PcaModel) -> np.ndarray:
    """Projection of centred traces onto all components; shape (m, k)."""
    x = np.asarray(traces, dtype=np.float64)
    if x.shape[-1] != model.mean.size:
        raise DimensionError("trace length does not match the PCA model")
    return (x - model.mean) @ model.components.T


def pca_score_map(cube: ScanCube, model: PcaModel, component_index: int) -> ScalarMap:
    """Per-pixel projection onto one principal component (0-based index)."""
    if not (0 <= component_index < model.k):
        raise DimensionError(f"component index {component_index} outside [0, {model.k})")
    scores = pca_scores(cube.data.reshape(-1, cube.nt), model)[:, component_index]
    values = scores.reshape(cube.ny, cube.nx)
    return ScalarMap(
        values=values,
        valid=np.ones(values.shape, dtype=bool),
        label=f"PC{component_index + 1} score",
    )


@dataclass(frozen=True)
class RenderedMap:
    """16-bit render of one map on a (possibly shared) scale."""

    levels: np.ndarray  # (ny, nx) uint16
    valid: np.ndarray  # (ny, nx) bool
    shared_min: float
    shared_max: float
    colormap: str
    label: str


def group_scale(maps) -> tuple[float, float]:
    """Joint (min, max) over the valid pixels of all maps."""
    lo = np.inf
    hi = -np.inf
    for m in maps:
        if m.valid.any():
            vals = m.values[m.valid]
            lo = min(lo, float(vals.min()))
            hi = max(hi, float(vals.max()))
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise RenderError("no valid pixel in any map of the group")
    if lo >= hi:
        raise RenderError(f"degenerate value range [{lo}, {hi}]: nothing to scale")
    return lo, hi


def render_group(
    maps,
    colormap: str = "grayscale",
    scale: tuple[float, float] | None = None,
) -> list[RenderedMap]:
    """Render maps on one shared scale: level = round(65535*(v-lo)/(hi-lo)).

    The same value yields the same level in every image of the group;
    invalid pixels get level 0 and are recorded in the sidecar mask.
    """
    maps = list(maps)
    if not maps:
        raise RenderError("render group is empty")
    if colormap not in COLORMAPS:
        raise FormatError(f"unknown colormap {colormap!r}; choose from {COLORMAPS}")
    lo, hi = group_scale(maps) if scale is None else scale
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise RenderError(f"degenerate value range [{lo}, {hi}]: nothing to scale")
    rendered = []
    for m in maps:
        norm = (m.values - lo) / (hi - lo)
        levels = np.rint(np.clip(np.nan_to_num(norm, nan=0.0), 0.0, 1.0) * 65535.0)
        levels = np.where(m.valid, levels, 0.0).astype(np.uint16)
        rendered.append(
            RenderedMap(
                levels=levels,
                valid=m.valid.copy(),
                shared_min=lo,
                shared_max=hi,
                colormap=colormap,
                label=m.label,
            )
        )
    return rendered


def colormap_table(name: str) -> np.ndarray:
    """256x3 uint8 lookup table for the named colormap."""
    ramp = np.arange(256, dtype=np.float64) / 255.0
    if name in ("gray", "grayscale"):
        rgb = np.stack([ramp, ramp, ramp], axis=1)
    elif name == "hot":
        r = np.clip(3.0 * ramp, 0, 1)
        g = np.clip(3.0 * ramp - 1.0, 0, 1)
        b = np.clip(3.0 * ramp - 2.0, 0, 1)
        rgb = np.stack([r, g, b], axis=1)
    else:
        raise FormatError(f"unknown colormap {name!r}")
    return np.rint(rgb * 255.0).astype(np.uint8)


def write_pgm16(rendered: RenderedMap, path) -> None:
    """Binary PGM, 16-bit, big-endian sample order per the format."""
    ny, nx = rendered.levels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n65535\n".encode("ascii"))
        fh.write(rendered.levels.astype(">u2").tobytes())


def write_ppm(rendered: RenderedMap, path) -> None:
    """Binary PPM through the rendered map's 256-entry colour table."""
    table = colormap_table(rendered.colormap)
    idx = (rendered.levels.astype(np.uint32) * 255 + 32767) // 65535
    rgb = table[idx]
    ny, nx = rendered.levels.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(rgb.astype(np.uint8).tobytes())


def write_mask_pgm(rendered: RenderedMap, path) -> None:
    """Sidecar validity mask: 8-bit PGM, 255 = valid, 0 = invalid."""
    ny, nx = rendered.valid.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write((rendered.valid.astype(np.uint8) * 255).tobytes())


def write_raster(rendered: RenderedMap, path) -> None:
    """PGM for grayscale renders, PPM when a colour table is selected."""
    if rendered.colormap == "grayscale":
        write_pgm16(rendered, path)
    else:
        write_ppm(rendered, path)
