"""Time-domain waveforms, Fourier transforms, windowing, phase unwrapping.

Conventions used throughout the toolkit:

* time in picoseconds, frequency in terahertz (1/ps), all arithmetic in
  float64;
* spectra hold the non-negative-frequency bins of the real DFT of a
  (zero-padded) trace;
* spectral phase is *delay-positive*: ``phase = -angle(bins)``, so a pulse
  arriving later carries a larger phase.  This is the sign under which
  ``n = 1 + c * (phi_sam - phi_ref) / (2*pi*f*d)`` holds for a medium that
  delays the pulse by ``(n-1)*d/c``.

All functions are pure; traces and spectra are immutable and safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError

C_MM_PER_PS = 0.299792458  # speed of light in mm/ps
TWO_PI = 2.0 * math.pi

TRACE_CSV_HEADER = "time_ps,amplitude"


def _finite_f64(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PulseTrace:
    """One time-domain waveform; sample k sits at t0 + k*dt (ps)."""

    dt: float
    t0: float
    samples: np.ndarray

    def __post_init__(self):
        samples = _finite_f64(self.samples, "samples")
        if samples.ndim != 1 or samples.size < 2:
            raise DimensionError("trace needs at least 2 samples")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise FormatError("trace dt must be finite and > 0")
        if not np.isfinite(self.t0):
            raise FormatError("trace t0 must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def nt(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.nt) * self.dt


@dataclass(frozen=True)
class Spectrum:
    """Non-negative-frequency bins of the real DFT of a trace.

    ``nt`` is the transform length that produced the bins (after any zero
    padding), needed for Hermitian completion on the way back; ``t0`` is
    carried through from the generating trace.
    """

    df: float
    bins: np.ndarray
    nt: int
    t0: float = 0.0

    def __post_init__(self):
        bins = np.array(self.bins, dtype=np.complex128)
        if bins.ndim != 1 or bins.size < 2:
            raise DimensionError("spectrum needs at least 2 bins")
        if not np.all(np.isfinite(bins)):
            raise FormatError("spectrum bins contain non-finite values")
        if not (np.isfinite(self.df) and self.df > 0):
            raise FormatError("spectrum df must be finite and > 0")
        if self.nt // 2 + 1 != bins.size:
            raise DimensionError(
                f"inconsistent nf/nt pairing: nt={self.nt} implies "
                f"{self.nt // 2 + 1} bins, got {bins.size}"
            )
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)

    @property
    def nf(self) -> int:
        return self.bins.size

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.nf) * self.df

    def amplitude(self) -> np.ndarray:
        return np.abs(self.bins)

    def phase(self) -> np.ndarray:
        """Wrapped delay-positive phase (see module docstring for the sign)."""
        return -np.angle(self.bins)


@dataclass(frozen=True)
class Window:
    """Taper over the half-open sample range [start, stop).

    Samples outside the range are zeroed when the window is applied.
    """

    kind: str  # "rectangular" | "hann" | "tukey"
    start: int
    stop: int
    taper: float = 0.0  # tukey taper fraction in [0, 1]

    def __post_init__(self):
        if self.kind not in ("rectangular", "hann", "tukey"):
            raise FormatError(f"unknown window kind {self.kind!r}")
        if not (0 <= self.start < self.stop):
            raise DimensionError("window needs 0 <= start < stop")
        if self.kind == "tukey" and not (0.0 <= self.taper <= 1.0):
            raise FormatError("tukey taper fraction must lie in [0, 1]")

    def weights(self) -> np.ndarray:
        n = self.stop - self.start
        if self.kind == "rectangular":
            return np.ones(n)
        if self.kind == "hann":
            return _hann(n)
        return _tukey(n, self.taper)


def _hann(n: int) -> np.ndarray:
    # Symmetric hann: w[k] = 0.5*(1 - cos(2*pi*k/(n-1))); n=4 gives (0, .75, .75, 0).
    return np.hanning(n)


def _tukey(n: int, taper: float) -> np.ndarray:
    if taper <= 0.0 or n == 1:
        return np.ones(n)
    if taper >= 1.0:
        return _hann(n)
    w = np.ones(n)
    edge = taper * (n - 1) / 2.0
    k = np.arange(n, dtype=np.float64)
    lo = k < edge
    w[lo] = 0.5 * (1.0 + np.cos(np.pi * (k[lo] / edge - 1.0)))
    hi = k > (n - 1) - edge
    w[hi] = 0.5 * (1.0 + np.cos(np.pi * ((k[hi] - (n - 1)) / edge + 1.0)))
    return w


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def forward_transform(trace: PulseTrace, pad_to: int | None = None) -> Spectrum:
    """Real DFT of the (zero-padded) trace, non-negative bins only.

    By default the trace is zero padded to the next power of two;
    ``pad_to=trace.nt`` requests an exact-length transform.
    """
    if pad_to is None:
        n = next_pow2(trace.nt)
    else:
        if pad_to < trace.nt:
            raise DimensionError(f"pad_to={pad_to} < trace length {trace.nt}")
        n = int(pad_to)
    bins = np.fft.rfft(trace.samples, n=n)
    return Spectrum(df=1.0 / (n * trace.dt), bins=bins, nt=n, t0=trace.t0)


def inverse_transform(spec: Spectrum, nt: int) -> PulseTrace:
    """Hermitian-complete inverse DFT, truncated to the first ``nt`` samples.

    ``nt`` may be at most the transform length; passing the pre-padding
    length of the generating trace drops the zero padding exactly.
    """
    if not (2 <= nt <= spec.nt):
        raise DimensionError(
            f"inconsistent nf/nt pairing: cannot reconstruct {nt} samples "
            f"from a length-{spec.nt} transform"
        )
    full = np.fft.irfft(spec.bins, n=spec.nt)
    dt = 1.0 / (spec.nt * spec.df)
    return PulseTrace(dt=dt, t0=spec.t0, samples=full[:nt])


def apply_window(trace: PulseTrace, window: Window) -> PulseTrace:
    if window.stop > trace.nt:
        raise DimensionError(
            f"window range [{window.start}, {window.stop}) exceeds trace length {trace.nt}"
        )
    out = np.zeros(trace.nt)
    out[window.start : window.stop] = (
        trace.samples[window.start : window.stop] * window.weights()
    )
    return PulseTrace(dt=trace.dt, t0=trace.t0, samples=out)


def unwrap_phase(
    wrapped,
    anchor: str = "none",
    freqs=None,
    fit_mask=None,
) -> np.ndarray:
    """Remove 2*pi jumps from a phase-vs-frequency sequence.

    Corrections are exact integer multiples of 2*pi accumulated in
    increasing frequency from the first element.  With
    ``anchor="zero_dc_extrapolation"`` a least-squares line is fitted
    through the unwrapped phase (optionally restricted to ``fit_mask``,
    with abscissae ``freqs``, defaulting to the bin index) and the whole
    sequence is shifted by the integer multiple of 2*pi that brings the
    line's extrapolation to f=0 into (-pi, pi].  This removes the global
    branch ambiguity that would otherwise offset a refractive index.
    """
    if anchor not in ("none", "zero_dc_extrapolation"):
        raise FormatError(f"unknown unwrap anchor {anchor!r}")
    w = np.asarray(wrapped, dtype=np.float64)
    if w.ndim != 1:
        raise DimensionError("unwrap_phase expects a 1-d sequence")
    if not np.all(np.isfinite(w)):
        raise FormatError("wrapped phases contain non-finite values")
    if w.size == 0:
        return w.copy()

    jumps = np.round(np.diff(w) / TWO_PI)
    out = w.copy()
    out[1:] -= TWO_PI * np.cumsum(jumps)

    if anchor == "zero_dc_extrapolation":
        x = np.arange(w.size, dtype=np.float64) if freqs is None else np.asarray(freqs, dtype=np.float64)
        if x.shape != w.shape:
            raise DimensionError("freqs must match the phase sequence length")
        mask = np.ones(w.size, dtype=bool) if fit_mask is None else np.asarray(fit_mask, dtype=bool)
        if mask.shape != w.shape:
            raise DimensionError("fit_mask must match the phase sequence length")
        if not mask.any():
            mask = np.ones(w.size, dtype=bool)
        intercept = _line_intercept(x[mask], out[mask])
        m = math.ceil((intercept - math.pi) / TWO_PI)
        out -= TWO_PI * m
    return out


def _line_intercept(x: np.ndarray, y: np.ndarray) -> float:
    """Intercept at x=0 of the least-squares line through (x, y)."""
    if x.size < 2 or np.ptp(x) == 0.0:
        return float(np.mean(y))
    xm = x.mean()
    ym = y.mean()
    slope = np.dot(x - xm, y - ym) / np.dot(x - xm, x - xm)
    return float(ym - slope * xm)


def trace_to_csv(trace: PulseTrace, path) -> None:
    times = trace.times
    with open(path, "w") as fh:
        fh.write(TRACE_CSV_HEADER + "\n")
        for t, a in zip(times, trace.samples):
            fh.write(f"{t:.17g},{a:.17g}\n")


def trace_from_csv(path) -> PulseTrace:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRACE_CSV_HEADER:
            raise FormatError(f"bad trace CSV header {header!r}, expected {TRACE_CSV_HEADER!r}")
        times = []
        amps = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected two columns")
            try:
                times.append(float(parts[0]))
                amps.append(float(parts[1]))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if len(times) < 2:
        raise FormatError("trace CSV needs at least 2 rows")
    times = np.asarray(times)
    diffs = np.diff(times)
    dt = float(np.median(diffs))
    if dt <= 0 or not np.all(np.abs(diffs - dt) <= 1e-9 * max(abs(dt), 1.0)):
        raise FormatError("trace CSV time axis is not uniformly increasing")
    return PulseTrace(dt=dt, t0=float(times[0]), samples=np.asarray(amps))
