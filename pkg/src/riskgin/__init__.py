"""Triple-channel GIN with attention and gated fusion for enterprise risk classification."""

__version__ = "0.1.0"
