"""Camera calibration via the camera projection loss.

Thin Python layer over the C++ core: stereo pinhole projection, the
13-way decomposed projection loss with adaptive weighting, NMAE/hFOV
metrics, synthetic dataset generation, and the gradient-based estimators.
"""

from cplcalib._core import *  # noqa: F401,F403
from cplcalib._core import __version__  # noqa: F401
