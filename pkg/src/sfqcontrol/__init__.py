"""Digital (single-flux-quantum) control of a leaky transmon qubit."""

__version__ = "0.1.0"
