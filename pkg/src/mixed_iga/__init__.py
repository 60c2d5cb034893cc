"""Mixed IGA - smooth mixed degree isogeometric collocation on planar multi-patch domains."""

__version__ = "1.0.0"
