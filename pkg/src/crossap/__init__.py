"""Cross-AP channel gain map inference toolkit."""

__version__ = "0.1.0"
