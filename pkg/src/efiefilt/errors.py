"""Exception types shared across the package."""


class EfieFiltError(Exception):
    """Base class for all package-specific errors."""


class ParseError(EfieFiltError):
    """A mesh file could not be parsed under the requested format."""


class TopologyError(EfieFiltError):
    """Mesh is not a closed, consistently oriented, genus-0 2-manifold."""


class DegenerateElement(EfieFiltError):
    """A triangle has (numerically) zero area."""


class QuadratureFailure(EfieFiltError):
    """A near-singular pair fell outside the validity of the analytic rule."""


class ConvergenceError(EfieFiltError):
    """An inner iteration (CG, power iteration, Lanczos) failed to converge."""


class SingularMatrix(EfieFiltError):
    """Matrix is singular to working precision (sigma_min < 1e-14 * sigma_max).

    Carries the computed extreme singular values so callers that only need a
    rough magnitude (e.g. sweep reports) can still use the ratio.
    """

    def __init__(self, sigma_max: float, sigma_min: float):
        self.sigma_max = sigma_max
        self.sigma_min = sigma_min
        self.cond_estimate = sigma_max / sigma_min if sigma_min > 0 else float("inf")
        super().__init__(
            f"singular to working precision: sigma_max={sigma_max:.3e}, "
            f"sigma_min={sigma_min:.3e}"
        )
