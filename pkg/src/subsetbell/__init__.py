"""Planning and simulating Bell tests that evaluate a random fraction of contexts."""

__version__ = "0.1.0"
