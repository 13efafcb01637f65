"""Exception types shared across the package."""


class HgctError(Exception):
    """Base class for all package-specific errors."""


class DegenerateInput(HgctError):
    """Point subset is rank-deficient (collinear/coincident); no unique rigid fit."""


class EmptyGraph(HgctError):
    """Every off-diagonal compatibility entry was thresholded away."""


class NoEdges(HgctError):
    """Hypergraph has no non-empty hyperedge."""


class NonFinite(HgctError):
    """A NaN or Inf appeared in a network intermediate or gradient."""


class NoHypothesis(HgctError):
    """Every candidate transform was degenerate; nothing to rank."""


class ConfigError(HgctError):
    """Malformed or unknown configuration input."""
