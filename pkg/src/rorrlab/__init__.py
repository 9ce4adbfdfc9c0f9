"""rorrlab: a desk-scale laboratory for the k-fold Rorrelation problem.

Subpackages cover Boolean Fourier arithmetic (boolfn), decision trees
and their Fourier growth (dtree), random orthogonal matrices and
goodness (ortho), the Rorrelation functional (rorrelation), the hard
distribution and its moments (dist), the quantum query simulator
(qsim), classical distinguishing experiments (distinguish), and the
experiment CLI (cli).
"""

__version__ = "0.1.0"

from . import boolfn, dist, distinguish, dtree, ortho, qsim, rorrelation  # noqa: F401
