"""Exception types shared across the package."""


class DataError(ValueError):
    """Bad input data: parsing failures, schema mismatches, impossible series."""


class InvalidSeriesError(DataError):
    """A death series violates its invariants (negative counts, day gaps, ...)."""


class SamplerError(RuntimeError):
    """The sampler could not produce usable draws."""


class OracleError(RuntimeError):
    """A brute-force reference computation failed to converge."""
