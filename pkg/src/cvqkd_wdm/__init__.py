"""Joint planning of CV-QKD and classical WDM traffic on a shared fiber network."""

__version__ = "0.1.0"
