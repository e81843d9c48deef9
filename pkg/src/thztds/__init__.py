"""THz time-domain spectroscopy toolkit.

Optical-constant extraction from pulse data, hyperspectral scan-cube
imaging modalities, synthetic ground-truth phantoms, PCA baselines, and a
physics-constrained convolutional autoencoder for feature extraction.
"""

from .errors import (
    ComputeError,
    DimensionError,
    FormatError,
    GatingError,
    GeometryError,
    ModelError,
    NoBandError,
    NumericError,
    OutputError,
    RenderError,
    ThzError,
    UsageError,
)
from .signal import (
    C_MM_PER_PS,
    PulseTrace,
    Spectrum,
    Window,
    apply_window,
    forward_transform,
    inverse_transform,
    unwrap_phase,
)
from .optics import (
    MaterialModel,
    OpticalConstants,
    SampleGeometry,
    apply_forward_model,
    extract_constants,
    sample_material,
)
from .cube import (
    GateRegions,
    ScalarMap,
    ScanCube,
    constants_map,
    derive_gates,
    frequency_slice,
    gate_image,
    read_cube,
    write_cube,
)
from .phantom import (
    MATERIALS,
    LabeledCube,
    PhantomSpec,
    RegionSpec,
    load_preset,
    make_reference,
    synthesize,
)
from .features import (
    PcaModel,
    pca_fit,
    pca_score_map,
    pca_scores,
    render_group,
)

__version__ = "0.1.0"
