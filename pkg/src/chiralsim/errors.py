"""Exception types shared across the package.

The CLI maps these onto exit codes: validation/usage problems exit 2,
non-convergence exits 3, trajectory divergence exits 4.
"""


class ChiralSimError(Exception):
    """Base class for all package errors."""


class ParameterError(ChiralSimError, ValueError):
    """A parameter violates its allowed range; carries the field name."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class UsageError(ChiralSimError, ValueError):
    """An operation was called with arguments outside its contract."""


class NonFiniteStateError(ChiralSimError):
    """State contains NaN/inf; carries the first offending atom index."""

    def __init__(self, index, what="state"):
        self.index = index
        super().__init__(f"non-finite {what} at atom index {index}")


class DivergenceError(ChiralSimError):
    """Integration blew past the coordinate bound; carries the time stamp."""

    def __init__(self, t):
        self.t = t
        super().__init__(f"trajectory diverged at t = {t:g} (coordinate exceeded 1e6)")


class SingularSystemError(ChiralSimError):
    """Linear steady-coherence system is singular or too ill-conditioned."""


class NoSolutionError(ChiralSimError):
    """The iterative chiral steady-state solver found no stable root.

    Mirrors the non-convergence of the time-domain method close to
    resonance; carries the atom index that failed.
    """

    def __init__(self, atom_index, delta):
        self.atom_index = atom_index
        self.delta = delta
        super().__init__(
            f"no stable equilibrium position for atom {atom_index} at delta = {delta:g}"
        )


class InfiniteTemperatureError(ChiralSimError):
    """Requested the Einstein-relation temperature with zero damping."""
