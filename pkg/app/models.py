# app/models.py
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.utils.gamma import is_nonpositive_integer

Method = Literal["contour-i", "contour-ii", "contour-iii", "series", "sphere-mc"]

CASE_SHAPES = {
    (0, 0): "0F0",
    (0, 1): "0F1",
    (1, 0): "1F0",
    (1, 1): "1F1",
    (2, 1): "2F1",
}


class ParameterVectors(BaseModel):
    """Numerator parameters a and denominator parameters b of a pFq."""

    model_config = ConfigDict(frozen=True)

    a: Tuple[complex, ...] = ()
    b: Tuple[complex, ...] = ()

    @field_validator("b")
    @classmethod
    def denominators_off_poles(cls, b):
        for value in b:
            if is_nonpositive_integer(value):
                raise ValueError(f"denominator parameter {value} is a nonpositive integer")
        return b

    @model_validator(mode="after")
    def order_admissible(self):
        if self.p > self.q + 1:
            raise ValueError(f"p={self.p} > q+1={self.q + 1}: the series diverges")
        return self

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)

    @property
    def case(self) -> str:
        return CASE_SHAPES.get((self.p, self.q), "generic-series")


class SpikeArgument(BaseModel):
    """Rank-one X through its nonzero eigenvalue x, in dimension r, family alpha.

    x = 0 is accepted and stands for X = 0 (every evaluator returns 1).
    """

    model_config = ConfigDict(frozen=True)

    x: float = Field(ge=0)
    r: int = Field(ge=1)
    alpha: float = Field(gt=0)


class SpikeDecomposition(BaseModel):
    """m (and epsilon) with r/alpha = m + 1 or m + epsilon; r = 1, alpha = 2 gives m = -1/2."""

    model_config = ConfigDict(frozen=True)

    m: float = Field(ge=-0.5)
    epsilon: Optional[float] = None


class Spectrum(BaseModel):
    model_config = ConfigDict(frozen=True)

    y: Tuple[float, ...] = Field(min_length=1)

    @field_validator("y")
    @classmethod
    def positive_definite(cls, y):
        if any(not v > 0 for v in y):
            raise ValueError("Y must be positive definite: every eigenvalue > 0")
        return y

    @property
    def r(self) -> int:
        return len(self.y)

    @property
    def max(self) -> float:
        return max(self.y)

    @property
    def min(self) -> float:
        return min(self.y)


class EvalResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: complex
    err_estimate: float = Field(ge=0)
    method: Method
    effort: int = Field(ge=0)
