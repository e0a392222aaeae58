"""Three-microphone sound localization under sample-rate quantization.

Simulation of quantized TDOA observations, GCC-PHAT delay estimation,
multilateration, learned azimuth correctors and offset statistics.
"""

from .geometry import ArrayGeometry, Medium, SamplingSpec, SourcePosition
from .locate import LocationEstimate, localize_pipeline, multilaterate
from .simulate import SimConfig, run_batch

__all__ = [
    "ArrayGeometry",
    "Medium",
    "SamplingSpec",
    "SourcePosition",
    "SimConfig",
    "run_batch",
    "multilaterate",
    "localize_pipeline",
    "LocationEstimate",
]
__version__ = "0.1.0"
