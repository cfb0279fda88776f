"""Adaptive block-DCT compression of radar range-Doppler tensors."""

__version__ = "0.1.0"

from .codec import (EncodedFrame, bit_rate, decode_frame, encode_frame, reprune,  # noqa: E402
                    scale_overhead, value_bpp)
from .errors import (AdaRadarError, CorruptPayloadError, FormatError, ShapeError,  # noqa: E402
                     TruncatedPayloadError)
from .oracle import DetectionOracle, OracleConfig, SegmentationOracle, detect  # noqa: E402
from .ratecontrol import ControlParams, run_adaptive  # noqa: E402
from .tensor import RadarTensor, SceneSpec, Target, generate_scene  # noqa: E402

__all__ = [
    "AdaRadarError", "ControlParams", "CorruptPayloadError", "DetectionOracle", "EncodedFrame",
    "FormatError", "OracleConfig", "RadarTensor", "SceneSpec", "SegmentationOracle", "ShapeError",
    "Target", "TruncatedPayloadError", "bit_rate", "decode_frame", "detect", "encode_frame",
    "generate_scene", "reprune", "run_adaptive", "scale_overhead", "value_bpp",
]
