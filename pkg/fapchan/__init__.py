"""First-arrival-position densities for drift-diffusion channels."""

__version__ = "0.1.0"
