"""Exception hierarchy shared by all modules.

Everything that can fail *numerically* (as opposed to a caller passing
malformed input) derives from ``NumericsError`` so batch drivers can map
the two classes of failure to distinct exit codes.
"""


class NumericsError(Exception):
    """A computation failed for numerical reasons (singularity, divergence)."""


class ResonanceError(NumericsError):
    """Boundary-value profile denominator vanished: the squared argument sits
    at a Dirichlet eigenvalue of the radial operator."""


class IllPosedError(NumericsError):
    """Effective inertia (body + added mass/damping) below the well-posedness
    threshold; the coupled solve is singular."""


class ConvergenceError(NumericsError):
    """An iteration (inverse iteration, Newton polish, continuation,
    adaptive contour) failed to converge within its budget."""


class ContourError(NumericsError):
    """A root-counting contour passes through (or too close to) a zero."""
