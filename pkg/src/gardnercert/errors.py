"""Exception types raised across the package."""


class GardnerCertError(Exception):
    """Base class for all package errors."""


class NonFiniteSampleError(GardnerCertError):
    """A field contains NaN or Inf; carries the first offending index."""

    def __init__(self, index: int, what: str = "sample"):
        self.index = index
        super().__init__(f"non-finite {what} at index {index}")


class SpectralSymmetryError(GardnerCertError):
    """Hermitian symmetry violated beyond tolerance; names the worst mode."""

    def __init__(self, mode: int, violation: float, tol: float):
        self.mode = mode
        self.violation = violation
        super().__init__(
            f"Hermitian symmetry violated at mode k={mode}: "
            f"relative error {violation:.3e} exceeds tolerance {tol:.1e}"
        )


class NonlinearOverflowError(GardnerCertError):
    """Pointwise powers overflowed; carries max |u| at the failure."""

    def __init__(self, max_abs: float):
        self.max_abs = max_abs
        super().__init__(f"overflow in pointwise powers, max |u| = {max_abs:.6e}")


class QuadratureNodeError(GardnerCertError):
    """Duhamel evaluation requested off the node grid, or node count invalid."""


class PicardDivergenceError(GardnerCertError):
    """Iteration differences grew for several consecutive sweeps."""

    def __init__(self, msg: str = ""):
        super().__init__(
            msg or "Picard iteration diverging; retry with a smaller step length T"
        )


class StepSelectionError(GardnerCertError):
    """No admissible dyadic step length exists at double precision."""


class NormCapError(GardnerCertError):
    """Solution norm exceeded the configured safety cap."""


class SolitonConstructionError(GardnerCertError):
    """Traveling-wave profile failed its stationary-ODE residual gate."""


class BlowUpError(GardnerCertError):
    """Reference integration produced a non-finite state."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"reference solver state became non-finite near t = {t:.6g}")


class ProfileFileError(GardnerCertError):
    """Profile file unreadable or inconsistent with the run grid."""


class UsageError(GardnerCertError):
    """Invalid command-line configuration; message lists every violation."""
