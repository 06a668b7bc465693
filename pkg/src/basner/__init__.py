"""Chinese word segmentation and named entity recognition with boundary
assembling: LSTM encoder, linear-chain CRF heads, lexicon-driven boundary
post-processing, and a two-stage alternating trainer."""

from .kernels import BACKEND as KERNELS_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNELS_BACKEND", "__version__"]
