class DataError(Exception):
    """Input data violates a format, shape, or content contract.

    Raised for anything wrong with user-supplied files or values; the CLI
    maps it to exit code 1. Misconfigured policy objects raise ValueError
    instead.
    """
