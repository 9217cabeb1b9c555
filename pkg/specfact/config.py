"""
Configuration models for factorization, quadrature, verification and runs.

All models are pydantic so that a run configuration can be embedded in a
report and validated again when the report is replayed.
"""

import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

OUT_DIR_ENV = "SPECFACT_OUT_DIR"
LOG_LEVEL_ENV = "SPECFACT_LOG_LEVEL"

SCALAR_THEOREMS = ("thm1.2", "thm2.2", "thm2.3")
MATRIX_POWER_THEOREMS = ("thm1.3", "thm1.3-inf", "thm1.4", "thm1.4-inf", "thm1.5")
MATRIX_ORLICZ_THEOREMS = ("thm3.1", "thm3.2", "thm3.3")
THEOREMS = SCALAR_THEOREMS + MATRIX_POWER_THEOREMS + MATRIX_ORLICZ_THEOREMS

FAMILIES = ("ex1", "ex2", "scalar6")


class GridSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    size: int = 2**16
    confirm_by_doubling: bool = True
    doubling_rtol: float = Field(1e-6, gt=0)

    @field_validator("size")
    @classmethod
    def _power_of_two(cls, value):
        if value < 16 or value & (value - 1):
            raise ValueError("grid size must be a power of two >= 16")
        return value


class FactorizationSettings(BaseModel):
    """Knobs of the Wilson iteration; recorded in every factor report."""

    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(200, ge=1)
    tolerance: float = Field(1e-10, gt=0)
    truncation_degree: Optional[int] = Field(None, ge=1)
    max_halvings: int = Field(30, ge=0)


class QuadratureSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    order: int = Field(20, ge=2)
    ratio: float = Field(2.0, gt=1)
    floor: float = Field(1e-12, gt=0)
    max_subpanels: int = Field(4096, ge=1)
    # agreement required between consecutive orders of the refinement
    rtol: float = Field(1e-7, gt=0)
    atol: float = Field(1e-15, ge=0)

    @property
    def refinement_orders(self):
        """Orders tried by the refinement: half, one, two and four times ``order``."""
        return (max(2, self.order // 2), self.order, 2 * self.order, 4 * self.order)


class VerificationSettings(BaseModel):
    """Theorem parameters and the violation tolerance."""

    model_config = ConfigDict(frozen=True)

    p0: float = Field(2.0, gt=1)
    p1: float = Field(2.0, gt=1)
    alpha: float = Field(0.5, gt=0, lt=1)
    tolerance: float = Field(1e-6, ge=0)


class FamilyConfig(BaseModel):
    """A sweep description as read from a JSON config file."""

    family: Literal["ex1", "ex2", "scalar6"]
    params: dict = Field(default_factory=dict)
    eps: list[float] = Field(default_factory=list)
    grid_size: Optional[int] = None
    theorems: list[str] = Field(default_factory=list)
    grid: GridSettings = Field(default_factory=GridSettings)
    verification: VerificationSettings = Field(default_factory=VerificationSettings)
    factorization: FactorizationSettings = Field(
        default_factory=FactorizationSettings
    )
    quadrature: QuadratureSettings = Field(default_factory=QuadratureSettings)

    @field_validator("theorems")
    @classmethod
    def _known_theorems(cls, value):
        unknown = [t for t in value if t not in THEOREMS]
        if unknown:
            raise ValueError(f"unknown theorem ids: {unknown}")
        return value

    @field_validator("eps")
    @classmethod
    def _positive_eps(cls, value):
        if any(not 0 < e < 1 for e in value):
            raise ValueError("every eps must lie in (0, 1)")
        return value

    @model_validator(mode="after")
    def _scalar_theorems_only_for_scalar(self):
        if self.family == "scalar6":
            bad = [t for t in self.theorems if t not in SCALAR_THEOREMS]
        else:
            bad = [t for t in self.theorems if t in SCALAR_THEOREMS]
        if bad:
            raise ValueError(f"theorems {bad} do not apply to family {self.family}")
        return self


class RunConfig(BaseModel):
    """Everything needed to regenerate a CLI run."""

    command: Literal["factor", "verify", "sweep", "constants", "selftest"]
    input_path: Optional[str] = None
    out_dir: Optional[str] = None
    family: Optional[str] = None
    grid_size: Optional[int] = None
    theorem: Optional[str] = None
    eps: Optional[float] = None
    seed: int = 0
    jobs: int = Field(1, ge=1)
    grid: GridSettings = Field(default_factory=GridSettings)
    verification: VerificationSettings = Field(default_factory=VerificationSettings)
    factorization: FactorizationSettings = Field(
        default_factory=FactorizationSettings
    )
    family_config: Optional[FamilyConfig] = None

    def output_root(self) -> Path:
        """Explicit flag, then SPECFACT_OUT_DIR, then ./specfact-out."""
        if self.out_dir:
            return Path(self.out_dir)
        return Path(os.environ.get(OUT_DIR_ENV, "specfact-out"))


def default_log_level():
    return os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
