"""Curvature and covariant derivatives of classical and extended holomorphic curves."""

from importlib.metadata import PackageNotFoundError, version

from .curves import CurveJets, ExtendedCurve
from .geometry import AntiHol, ClassicalGeometry, DerivPlan, Hol
from .indexing import MultiIndex
from .jets import WirtingerJet
from .model import Fb2Model, Frame, HolomorphicPolynomial

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "AntiHol",
    "ClassicalGeometry",
    "CurveJets",
    "DerivPlan",
    "ExtendedCurve",
    "Fb2Model",
    "Frame",
    "Hol",
    "HolomorphicPolynomial",
    "MultiIndex",
    "WirtingerJet",
    "__version__",
]
