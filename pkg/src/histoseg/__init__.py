"""histoseg: patch-based UNet tissue segmentation for stained whole-slide images."""

__version__ = "0.1.0"
