"""
Model parameters and the six Boltzmann weights derived from them.
"""

import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Tuple, Union

from ..utils.errors import DomainError

logger = logging.getLogger(__name__)

Number = Union[float, Fraction]


@dataclass(frozen=True)
class VertexWeights:
    """The six vertex weights a1, a2, b1, b2, c1, c2.

    Values may be floats or ``Fraction`` instances; exact arithmetic is kept
    when every weight is rational.
    """
    a1: Number
    a2: Number
    b1: Number
    b2: Number
    c1: Number
    c2: Number

    def as_tuple(self) -> Tuple[Number, ...]:
        """Weights in the canonical order a1, a2, b1, b2, c1, c2."""
        return (self.a1, self.a2, self.b1, self.b2, self.c1, self.c2)

    def logs(self) -> Tuple[float, ...]:
        """Natural logarithms of the weights in canonical order."""
        return tuple(math.log(w) for w in self.as_tuple())


@dataclass(frozen=True)
class ModelParams:
    """Weights a, b, c and the electric fields H, V."""
    a: float
    b: float
    c: float
    H: float = 0.0
    V: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c"):
            value = getattr(self, name)
            if not value > 0:
                raise DomainError(f"Weight {name} must be strictly positive, got {value}")

    @property
    def delta(self) -> float:
        """Anisotropy Δ = (a² + b² − c²) / 2ab."""
        return (self.a ** 2 + self.b ** 2 - self.c ** 2) / (2 * self.a * self.b)

    def with_fields(self, H: float, V: float) -> "ModelParams":
        """Same weights with new fields."""
        return replace(self, H=H, V=V)

    def weights(self, c_ratio: float = 1.0) -> VertexWeights:
        """
        Six vertex weights in exponential form.

        Args:
            c_ratio: c2/c1; the default c1 = c2 = c is the physical choice and
                other values only serve gauge checks

        Returns:
            VertexWeights with a1 = a·e^{H+V}, a2 = a·e^{−H−V}, b1 = b·e^{H−V},
            b2 = b·e^{−H+V}, c1 = c/√ratio, c2 = c·√ratio
        """
        H, V = self.H, self.V
        root = math.sqrt(c_ratio)
        return VertexWeights(
            a1=self.a * math.exp(H + V),
            a2=self.a * math.exp(-H - V),
            b1=self.b * math.exp(H - V),
            b2=self.b * math.exp(-H + V),
            c1=self.c / root,
            c2=self.c * root,
        )

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "H": self.H, "V": self.V}
