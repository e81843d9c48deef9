"""Transmission-mode extraction of n(f) and alpha(f), plus the forward model.

The extraction implements

    n(f)     = 1 + c * (phi_sam(f) - phi_ref(f)) / (2*pi*f*d)
    alpha(f) = -(2/d) * ln[ r(f) * (n(f)+1)^2 / (4*n(f)) ],   r = |E_sam|/|E_ref|

with unwrapped, DC-anchored phase differences (delay-positive sign, see
``thztds.signal``), d in mm for the phase term and cm for alpha (1/cm).
The forward model is the algebraic inverse: a single-pass transmission
with Fresnel loss, exponential attenuation, and a pure propagation delay.
No etalon echoes are modelled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    FormatError,
    GeometryError,
    ModelError,
    NoBandError,
)
from .signal import C_MM_PER_PS, TWO_PI, Spectrum, unwrap_phase

DEFAULT_BAND = (0.2, 2.0)  # THz
DEFAULT_FLOOR = 1e-3  # fraction of the reference's peak spectral magnitude

CONSTANTS_CSV_HEADER = "freq_thz,n,alpha_cm,valid"


@dataclass(frozen=True)
class SampleGeometry:
    """Sample thickness in millimetres."""

    thickness_mm: float

    def __post_init__(self):
        if not (np.isfinite(self.thickness_mm) and self.thickness_mm > 0):
            raise GeometryError(f"thickness must be finite and > 0, got {self.thickness_mm}")

    @property
    def thickness_cm(self) -> float:
        return self.thickness_mm / 10.0


@dataclass(frozen=True)
class OpticalConstants:
    """Per-frequency n and alpha with a validity mask.

    Masked-out entries are NaN and must be excluded from statistics.
    """

    frequencies: np.ndarray  # THz, strictly increasing
    n: np.ndarray
    alpha: np.ndarray  # 1/cm
    valid: np.ndarray  # bool

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        n = np.asarray(self.n, dtype=np.float64)
        alpha = np.asarray(self.alpha, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if not (freqs.shape == n.shape == alpha.shape == valid.shape) or freqs.ndim != 1:
            raise DimensionError("optical-constant arrays must share one 1-d shape")
        if freqs.size and np.any(np.diff(freqs) <= 0):
            raise FormatError("frequencies must be strictly increasing")
        if np.any(n[valid] < 1.0) or not np.all(np.isfinite(n[valid])):
            raise FormatError("valid refractive indices must be finite and >= 1")
        if not np.all(np.isfinite(alpha[valid])):
            raise FormatError("valid absorption values must be finite")
        for arr in (freqs, n, alpha, valid):
            arr.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "valid", valid)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(CONSTANTS_CSV_HEADER + "\n")
            for f, n, a, v in zip(self.frequencies, self.n, self.alpha, self.valid):
                if v:
                    fh.write(f"{f:.17g},{n:.17g},{a:.17g},1\n")
                else:
                    fh.write(f"{f:.17g},nan,nan,0\n")


@dataclass(frozen=True)
class MaterialModel:
    """Piecewise-linear (f, n, alpha) control points with clamped extrapolation."""

    frequencies: np.ndarray  # THz
    n: np.ndarray
    alpha: np.ndarray  # 1/cm
    name: str = ""

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        n = np.asarray(self.n, dtype=np.float64)
        alpha = np.asarray(self.alpha, dtype=np.float64)
        if not (freqs.shape == n.shape == alpha.shape) or freqs.ndim != 1 or freqs.size < 1:
            raise ModelError("material needs matching 1-d control-point arrays")
        if not (np.all(np.isfinite(freqs)) and np.all(np.isfinite(n)) and np.all(np.isfinite(alpha))):
            raise ModelError("material control points must be finite")
        if freqs.size > 1 and np.any(np.diff(freqs) <= 0):
            raise ModelError("material control frequencies must be strictly increasing")
        if np.any(n < 1.0):
            raise ModelError("material refractive index must be >= 1 everywhere")
        if np.any(alpha < 0.0):
            raise ModelError("material absorption must be >= 0 everywhere")
        for arr in (freqs, n, alpha):
            arr.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "alpha", alpha)


def sample_material(material: MaterialModel, frequencies) -> tuple[np.ndarray, np.ndarray]:
    """Interpolate (n, alpha) at the given frequencies.

    Piecewise linear between control points, constant beyond the endpoints
    (np.interp semantics).
    """
    f = np.asarray(frequencies, dtype=np.float64)
    if not np.all(np.isfinite(f)):
        raise FormatError("query frequencies must be finite")
    n = np.interp(f, material.frequencies, material.n)
    alpha = np.interp(f, material.frequencies, material.alpha)
    return n, alpha


def transfer_function(
    material: MaterialModel, geom: SampleGeometry, frequencies
) -> np.ndarray:
    """Complex single-pass transmission H(f) = E_sam/E_ref for the material."""
    f = np.asarray(frequencies, dtype=np.float64)
    n, alpha = sample_material(material, f)
    fresnel = 4.0 * n / (n + 1.0) ** 2
    attenuation = np.exp(-alpha * geom.thickness_cm / 2.0)
    delay = np.exp(-1j * TWO_PI * f * (n - 1.0) * geom.thickness_mm / C_MM_PER_PS)
    return fresnel * attenuation * delay


def apply_forward_model(
    reference: Spectrum, material: MaterialModel, geom: SampleGeometry
) -> Spectrum:
    """Synthesize the sample spectrum a material of known (n, alpha) produces."""
    bins = reference.bins * transfer_function(material, geom, reference.frequencies)
    return Spectrum(df=reference.df, bins=bins, nt=reference.nt, t0=reference.t0)


def extract_constants(
    sample: Spectrum,
    reference: Spectrum,
    geom: SampleGeometry,
    band: tuple[float, float] = DEFAULT_BAND,
    floor: float = DEFAULT_FLOOR,
) -> OpticalConstants:
    """Recover (n, alpha) from a sample/reference spectrum pair.

    Only bins inside ``band`` are returned.  A bin is valid iff the
    reference magnitude clears ``floor * max|E_ref|``, the log argument of
    the absorption formula is positive, and the recovered n is >= 1;
    anything else is masked out (NaN), never clamped.
    """
    if sample.nf != reference.nf or sample.nt != reference.nt:
        raise DimensionError("sample and reference spectra have different sizes")
    if abs(sample.df - reference.df) > 1e-12 * reference.df:
        raise DimensionError("sample and reference spectra have different df")
    if abs(sample.t0 - reference.t0) > 1e-9:
        raise DimensionError("sample and reference spectra have different time origins")

    f_lo, f_hi = band
    nyquist = (reference.nf - 1) * reference.df
    if not (0 < f_lo < f_hi <= nyquist * (1 + 1e-12)):
        raise NoBandError(f"band {band} not within (0, {nyquist:.6g}] THz")

    freqs = reference.frequencies
    in_band = (freqs >= f_lo) & (freqs <= f_hi) & (freqs > 0)
    if not in_band.any():
        raise NoBandError(f"no spectral bins inside band {band}")

    f = freqs[in_band]
    e_sam = sample.bins[in_band]
    e_ref = reference.bins[in_band]
    ref_mag = np.abs(e_ref)
    floor_ok = ref_mag >= floor * np.max(np.abs(reference.bins))

    # Unwrap the phase *difference* from the lowest in-band bin upward and
    # anchor its straight-line extrapolation at DC; equivalent to anchoring
    # both phases but robust where the individual phases spin quickly.
    dphi_wrapped = -(np.angle(e_sam) - np.angle(e_ref))
    dphi = unwrap_phase(
        dphi_wrapped, anchor="zero_dc_extrapolation", freqs=f, fit_mask=floor_ok
    )

    d_mm = geom.thickness_mm
    n = 1.0 + C_MM_PER_PS * dphi / (TWO_PI * f * d_mm)

    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(e_sam) / ref_mag
        ln_arg = r * (n + 1.0) ** 2 / (4.0 * n)
        alpha = -(2.0 / geom.thickness_cm) * np.log(ln_arg)

    valid = floor_ok & (n >= 1.0) & np.isfinite(ln_arg) & (ln_arg > 0)
    if not valid.any():
        raise NoBandError("validity mask is empty: no usable frequency bins")

    n = np.where(valid, n, np.nan)
    alpha = np.where(valid, alpha, np.nan)
    return OpticalConstants(frequencies=f, n=n, alpha=alpha, valid=valid)
