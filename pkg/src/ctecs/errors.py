"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class ResourceLimitError(RuntimeError):
    """A configured cap (dense size, sparsity, mask budget) would be exceeded."""
