"""Video directory -> labeled embedding file bridge."""

from embed_extractor.encoder import FramestatsEncoder, get_encoder
from embed_extractor.extract import ExtractionError, ExtractionJob, extract

__all__ = [
    "ExtractionError",
    "ExtractionJob",
    "FramestatsEncoder",
    "extract",
    "get_encoder",
]
