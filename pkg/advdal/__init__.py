"""
advdal package

Deep active learning with formally verified adversarial examples. A
branch-and-bound verifier harvests several distinct counterexamples around
each newly labeled sample, and the experiment engine compares that
augmentation against FGSM, DeepFool and BADGE baselines on an AUBC
(area-under-budget-curve) scale. See `README.md` in the project root for
a high level overview.
"""

from importlib import metadata

__all__ = ["__version__"]

try:
    __version__ = metadata.version("advdal")
except metadata.PackageNotFoundError:
    # Fallback during development
    __version__ = "0.1.0"
