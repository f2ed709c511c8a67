"""I/O sharing optimizer for block-granular affine loop programs."""

__version__ = "0.1.0"
