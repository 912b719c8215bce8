"""Exception types shared across the package."""


class AugmentError(Exception):
    """Base class for augmentation pipeline errors."""


class PaddingError(AugmentError):
    """Required reflection padding exceeds what the image extent can provide."""


class ContractError(AugmentError):
    """An internal invariant that callers rely on was violated."""
