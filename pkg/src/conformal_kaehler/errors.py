"""Exception type shared by every module of the toolkit."""


class GeometryError(ValueError):
    """A failed precondition or a violated structural identity.

    ``code`` is a short machine-readable tag (``"NOT_FLAT"``,
    ``"DEGENERATE_SUBSPACE"``, ...) that the pipeline records per point
    instead of aborting a run.
    """

    def __init__(self, code, message=""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)
