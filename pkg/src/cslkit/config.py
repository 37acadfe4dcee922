"""Run configuration and result document schemas for the command-line tool.

Both are pydantic models with unknown keys rejected. ``config_schema()`` and
``result_schema()`` return the published JSON schemas.
"""

from __future__ import annotations

from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import constants

SUBCOMMANDS = (
    "simulate", "dmatrix", "energy", "spectrum",
    "predict energy", "predict excitation", "predict com-demo", "predict fullerene",
    "predict sphere", "predict disc",
    "tails qpv", "tails smd",
    "cosmo toy", "cosmo frw",
)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ParamsConfig(_Strict):
    lam: float = Field(constants.GRW_LAMBDA, ge=0, description="collapse rate (1/s)")
    a: float = Field(constants.GRW_A, gt=0, description="smearing length (cm)")
    m0: float = Field(constants.PROTON_MASS, gt=0, description="reference mass (g)")
    alpha: list[float] = Field(default_factory=lambda: [1.0])
    dt: float = Field(1e-3, gt=0, description="integration step (s)")


Complex = Union[float, tuple[float, float]]


class LatticeConfig(_Strict):
    dimension: int = Field(1, ge=1, le=3)
    extent: int = Field(16, ge=2)
    spacing: float = Field(0.25, gt=0)
    masses: list[float] = Field(default_factory=lambda: [1.0], min_length=1, max_length=2)
    center: list[float] = Field(default_factory=lambda: [0.0])
    width: float = Field(1.0, gt=0)
    momentum: list[float] = Field(default_factory=lambda: [0.0])
    hbar: float = Field(1.0, gt=0)


class SystemConfig(_Strict):
    """Either an explicit diagonal model or a lattice.

    ``eigenvalues`` holds one row per collapse channel (a flat list is one
    channel); ``amplitudes`` are the initial state in the same basis, each a
    real number or a ``[re, im]`` pair; ``hamiltonian`` is an optional real
    matrix with optional imaginary part ``hamiltonian_imag``.
    """
    eigenvalues: Optional[list[list[float]]] = None
    measure: Optional[list[float]] = None
    amplitudes: Optional[list[Complex]] = None
    hamiltonian: Optional[list[list[float]]] = None
    hamiltonian_imag: Optional[list[list[float]]] = None
    lattice: Optional[LatticeConfig] = None

    @field_validator("eigenvalues", mode="before")
    @classmethod
    def _rows(cls, v):
        if isinstance(v, list) and v and not isinstance(v[0], list):
            return [v]
        return v

    @model_validator(mode="after")
    def _one_kind(self):
        explicit = self.eigenvalues is not None or self.amplitudes is not None
        if explicit and self.lattice is not None:
            raise ValueError("give either eigenvalues/amplitudes or lattice, not both")
        if explicit and (self.eigenvalues is None or self.amplitudes is None):
            raise ValueError("eigenvalues and amplitudes must be given together")
        if self.eigenvalues is not None:
            n = len(self.amplitudes)
            if any(len(r) != n for r in self.eigenvalues):
                raise ValueError("every eigenvalue row needs one entry per amplitude")
        return self


class RunSettings(_Strict):
    trajectories: int = Field(1000, ge=1)
    horizon: Optional[float] = Field(None, gt=0)
    save_times: Optional[list[float]] = None
    save_count: int = Field(5, ge=1)
    scheme: Literal["A", "B"] = "B"
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)
    outcome_tol: float = Field(1e-6, gt=0, lt=1)
    cutoff: Optional[float] = Field(None, gt=0)
    points: int = Field(2001, ge=3)


class InputsConfig(_Strict):
    """Arguments of the closed-form calculators; unused fields are ignored by
    subcommands that do not need them."""
    # predict
    mass: Optional[float] = Field(None, gt=0)
    alpha: float = 1.0
    count: float = Field(1.0, ge=0)
    years: float = Field(constants.AGE_OF_UNIVERSE_YR, ge=0)
    matrix_element: Optional[float] = None
    masses: list[float] = Field(default_factory=lambda: [1.0, 3.0], min_length=2, max_length=2)
    alphas: list[float] = Field(default_factory=lambda: [1.0, 1.0], min_length=2, max_length=2)
    grid_points: int = Field(24, ge=4, le=64)
    time_of_flight: float = Field(0.05, gt=0)
    nucleons: float = Field(720.0, gt=0)
    accuracy: float = Field(0.01, gt=0)
    n_a3: float = Field(6e8, ge=0)
    n_total: float = Field(2.5e12, ge=0)
    elapsed: float = Field(1e-3, ge=0)
    radius: float = Field(2e-5, gt=0)
    thickness: float = Field(0.5e-5, gt=0)
    density: float = Field(9.0, gt=0)
    form_factor: float = Field(1.0, gt=0)
    amplification: Optional[float] = Field(None, gt=0)
    time: float = Field(70.0, gt=0)
    # tails
    histogram: Optional[str] = Field(None, description="CSV file with value,weight rows")
    values: Optional[list[float]] = None
    weights: Optional[list[float]] = None
    centers: Optional[list[float]] = None
    packet_width: Optional[float] = Field(None, gt=0)
    error_bar: Optional[float] = Field(None, gt=0)
    p_falsify: float = Field(3e-24, gt=0, lt=1)
    renormalize: bool = True
    mean: Optional[float] = None
    variance: Optional[float] = Field(None, ge=0)
    ratio_small: float = Field(1e-2, gt=0, lt=1)
    ratio_large: float = Field(1e2, gt=1)
    density_scale: float = Field(1.0, gt=0)
    density_small: float = Field(1e-3, gt=0)
    # cosmo
    g: float = 0.1
    m: float = Field(1.0, gt=0)
    V1: float = Field(1.0, gt=0)
    lambda0: float = Field(1.0, ge=0)
    toy_m0: Optional[float] = Field(None, gt=0)
    omega_m: float = 1.0
    omega_w: float = 0.0
    omega_lambda: float = 0.0
    h0: float = Field(1.0, gt=0)
    t_max: float = Field(1.0, gt=0)
    series_points: int = Field(11, ge=2)


class OutputSettings(_Strict):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class RunConfig(_Strict):
    subcommand: str
    params: ParamsConfig = Field(default_factory=ParamsConfig)
    system: SystemConfig = Field(default_factory=SystemConfig)
    run: RunSettings = Field(default_factory=RunSettings)
    inputs: InputsConfig = Field(default_factory=InputsConfig)
    output: OutputSettings = Field(default_factory=OutputSettings)

    @field_validator("subcommand")
    @classmethod
    def _known(cls, v):
        v = " ".join(v.split())
        if v not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {v!r}; expected one of {', '.join(SUBCOMMANDS)}")
        return v


class ResultDocument(_Strict):
    metadata: dict[str, Any]
    summary: dict[str, Any]
    columns: list[str]
    rows: list[list[Union[bool, float, int, str, None]]]


def config_schema() -> dict:
    return RunConfig.model_json_schema()


def result_schema() -> dict:
    return ResultDocument.model_json_schema()


def format_errors(exc) -> str:
    """One line per pydantic error, prefixed by the dotted field path."""
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "\n".join(lines)
