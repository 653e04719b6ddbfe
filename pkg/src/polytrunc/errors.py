"""Exception types shared across the package."""


class PolytruncError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(PolytruncError):
    pass


class IntersectionNotFace(PolytruncError):
    """Two fan cones intersect in a set that is not a common face."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class OverlappingCones(PolytruncError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class NotInPOfSigma(PolytruncError):
    """Support vector is only virtual: no polytope with this normal fan."""


class SingularSystem(PolytruncError):
    pass


class UnknownCone(PolytruncError):
    pass


class FanMismatch(PolytruncError):
    pass


class EmptyInput(PolytruncError):
    pass


class UnboundedTerm(PolytruncError):
    pass


class DivergentChain(PolytruncError):
    pass


class ArrangementTooLarge(PolytruncError):
    pass


class NonGenericXi(PolytruncError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class PosetMismatch(PolytruncError):
    pass


class NotSimplicial(PolytruncError):
    pass


class NotAFacePair(PolytruncError):
    pass


class NotAcute(PolytruncError):
    pass


class PartitionViolation(PolytruncError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class NoCertificate(PolytruncError):
    pass


class QuadratureStall(PolytruncError):
    def __init__(self, msg, best=None, error=None):
        super().__init__(msg)
        self.best = best
        self.error = error


class CosetEnumerationTooLarge(PolytruncError):
    pass


class InsufficientSamples(PolytruncError):
    pass


class IllConditioned(PolytruncError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class NonSupportedAtom(PolytruncError):
    pass


class KExprSyntaxError(PolytruncError):
    def __init__(self, msg, position=None):
        super().__init__(msg)
        self.position = position


class ScenarioError(PolytruncError):
    pass
