from typing import Optional, Tuple


class WannierError(Exception):
    """Base class for every failure raised by the optwannier services.

    Carries an optional pipeline stage label and the grid node (j1, j2) where
    the failure was detected; both are rendered by ``str()``.
    """

    def __init__(self, message: str, stage: Optional[str] = None,
                 node: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.message = message
        self.stage = stage
        self.node = node

    def with_context(self, stage: Optional[str] = None,
                     node: Optional[Tuple[int, int]] = None) -> 'WannierError':
        # keep the innermost labels, they are the most precise
        if self.stage is None and stage is not None:
            self.stage = stage
        if self.node is None and node is not None:
            self.node = node
        return self

    def __str__(self) -> str:
        parts = []
        if self.stage:
            parts.append(f"[{self.stage}]")
        parts.append(self.message)
        if self.node is not None:
            parts.append(f"at node (j1={self.node[0]}, j2={self.node[1]})")
        return " ".join(parts)


class DegenerateLattice(WannierError):
    pass


class ShapeMismatch(WannierError):
    pass


class UnknownModel(WannierError):
    pass


class ParseError(WannierError):
    pass


class HermiticityViolation(WannierError):
    pass


class NonHermitianInput(WannierError):
    pass


class NearDegenerate(WannierError):
    """Band touches a neighbour: second-smallest singular value below gap_tol."""

    def __init__(self, message: str, stage: Optional[str] = None,
                 node: Optional[Tuple[int, int]] = None, index: Optional[int] = None):
        super().__init__(message, stage=stage, node=node)
        # flat position inside a batched call, used to recover the node
        self.index = index


class NotSolvable(WannierError):
    """Poisson source with nonzero mean; on the curvature this is a Chern obstruction."""

    def __init__(self, message: str, mean: float = 0.0, stage: Optional[str] = None):
        super().__init__(message, stage=stage)
        self.mean = mean


class AmbiguousWinding(WannierError):
    pass


class ObstructedBranch(WannierError):
    pass


class IntegrabilityViolation(WannierError):
    pass


class WindowTooLarge(WannierError):
    pass


class InvalidConfig(WannierError):
    pass
