"""RIS-aided integrated imaging and communication simulator.

The package synthesizes FMCW sensing returns reflected through a
reconfigurable intelligent surface (RIS), builds a depth map of the scene,
detects a non-line-of-sight user in it, and uses the detected direction to
pick RIS communication beams with a small training budget.
"""

from risiac.constants import SPEED_OF_LIGHT

__version__ = "0.1.0"

__all__ = ["SPEED_OF_LIGHT", "__version__"]
