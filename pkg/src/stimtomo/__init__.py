"""stimtomo - simulated QST and SET polarization tomography."""

from importlib.metadata import version

__version__ = version("stimtomo")
