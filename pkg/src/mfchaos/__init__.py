"""Mean-field Levy particle systems, optimal transport and propagation of chaos."""
__version__ = "0.1.0"
