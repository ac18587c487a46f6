"""Exception types shared across the library."""


class PoleError(ValueError):
    """Evaluation requested exactly at (or too close to) a pole of the quantity."""


class DivergenceRegionError(ValueError):
    """Evaluation point lies outside the region where the series/integral converges."""


class RankDeficiencyError(ValueError):
    """A measure does not carry enough distinct atoms for the requested order."""


class PositivityLossError(RuntimeError):
    """An off-diagonal entry left the positive cone during time stepping.

    The flow preserves positivity exactly, so this signals a step size that is
    too large (or a blown-up state), not a property of the dynamics.
    """
