"""Exception types shared across the toolkit."""


class ShapeError(ValueError):
    """Array shape violates a divisibility or layout requirement."""


class NonFiniteError(ValueError):
    """Input contains NaN or Inf where finite values are required."""


class InvalidSubbandError(ValueError):
    """Subband identifier is inconsistent with the decomposition depth."""


class InvalidParamError(ValueError):
    """Parameter outside its documented range."""


class ScorerError(RuntimeError):
    """A scorer backend failed.

    ``kind`` is one of ``"transport"``, ``"protocol"``, ``"non_finite"``;
    ``batch_index`` identifies the offending batch when known.
    """

    def __init__(self, kind: str, message: str, batch_index: int | None = None):
        super().__init__(message)
        self.kind = kind
        self.batch_index = batch_index

    def __str__(self) -> str:
        base = super().__str__()
        if self.batch_index is not None:
            return f"[{self.kind}] {base} (batch {self.batch_index})"
        return f"[{self.kind}] {base}"
