"""Exception types raised across the toolkit.

Every error subclasses :class:`FairAuctionError` so callers can catch the
whole family, while tests and the CLI distinguish individual conditions.
"""


class FairAuctionError(ValueError):
    """Base class for all toolkit errors."""


# --- value-vector validation -------------------------------------------------

class EmptyVector(FairAuctionError):
    """A value vector must contain at least one entry."""


class NegativeValue(FairAuctionError):
    """Advertiser values must be nonnegative."""


class NonFiniteValue(FairAuctionError):
    """Advertiser values must be finite (no NaN or infinity)."""


class LengthMismatch(FairAuctionError):
    """Two vectors that must be compared coordinatewise have different lengths."""


class AllZeroValues(FairAuctionError):
    """The operation needs at least one strictly positive value."""


# --- rule parameters ----------------------------------------------------------

class InvalidEll(FairAuctionError):
    """The deduction exponent must be strictly positive."""


class InvalidBeta(FairAuctionError):
    """The cap mixture weight must lie in [0, 1]."""


class InvalidExponent(FairAuctionError):
    """The proportional-allocation exponent must be strictly positive."""


class InvalidLambda(FairAuctionError):
    """Similarity ratios are >= 1 by definition."""


class AlphaOutOfRange(FairAuctionError):
    """Target approximation ratios must lie strictly inside (0, 1)."""


class InvalidX(FairAuctionError):
    """The gap construction needs a ratio strictly greater than 1."""


class IndexOutOfRange(FairAuctionError):
    """Advertiser index outside the value vector."""


# --- solver failures ----------------------------------------------------------

class BisectionNotConverged(FairAuctionError):
    """The threshold bisection hit its iteration cap before the tolerance."""


class QuadratureNotConverged(FairAuctionError):
    """Adaptive quadrature hit its refinement cap before the tolerance."""


class NonMonotoneRule(FairAuctionError):
    """A payment was requested for a rule observed to decrease in the bid."""


# --- restricted-allocation helper ---------------------------------------------

class EmptyServeSet(FairAuctionError):
    """The restricted allocation needs a nonempty serve set."""


class ZeroValueInServeSet(FairAuctionError):
    """Every advertiser in the serve set must have a positive value."""


# --- set collections ----------------------------------------------------------

class InvalidCollection(FairAuctionError):
    """A set collection contained an empty set or an out-of-range index."""


class SetCrossesPartition(FairAuctionError):
    """A constraint set spans more than one partition cell."""


class OddK(FairAuctionError):
    """The total-variation gap example is defined for even k only."""


class KTooSmall(FairAuctionError):
    """The total-variation gap example needs k >= 4."""


# --- dataset and pipeline -----------------------------------------------------

class SchemaMismatch(FairAuctionError):
    """The CSV header does not match the documented bid-record schema."""


class MalformedRow(FairAuctionError):
    """A CSV row failed validation; carries the 1-based line number."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class InvalidConfig(FairAuctionError):
    """Synthetic-generator configuration failed validation."""


class EmptyIntersection(FairAuctionError):
    """Pair statistics need at least one shared advertiser."""


class EmptyHorizon(FairAuctionError):
    """The requested horizon contains no auctions."""


class NoComparableBuckets(FairAuctionError):
    """Parameter matching found no bucket populated in both profiles."""
