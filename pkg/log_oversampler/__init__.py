"""
Log anomaly detection with SeqGAN oversampling.

Balances the minority class of a labeled log corpus with sequence GANs, extracts
features with one autoencoder per label and classifies them with a GRU.
"""

__version__ = "0.1.0"

from .cli import main  # noqa: E402

__all__ = ["main"]
