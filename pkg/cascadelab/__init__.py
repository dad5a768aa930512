"""cascadelab: complex b-adic independent multiplicative cascades."""

__version__ = "0.1.0"
