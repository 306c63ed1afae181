"""Pydantic request/response models for the HTTP service.

Complex amplitudes travel as ``[re, im]`` pairs; matrices as nested lists.
Every numeric field carries full double precision so clients can format.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

ComplexPair = tuple[float, float]


def encode_complex_vector(v: np.ndarray) -> list[ComplexPair]:
    return [(float(z.real), float(z.imag)) for z in np.asarray(v, dtype=np.complex128)]


def encode_complex_matrix(m: np.ndarray) -> list[list[ComplexPair]]:
    return [encode_complex_vector(row) for row in np.asarray(m, dtype=np.complex128)]


class MemberModel(BaseModel):
    label: str
    origin: int
    factors: list[list[ComplexPair]]


class EnsembleDetail(BaseModel):
    name: str
    kind: str
    party_dims: list[int]
    labels: list[str]
    priors: list[float]
    members: list[MemberModel] = []
    kets: list[list[ComplexPair]] = []
    density_operators: list[list[list[ComplexPair]]] = []
    gram_defect: Optional[float] = None
    orthonormal: Optional[bool] = None


class CatalogList(BaseModel):
    names: list[str]


class ProtocolRunRequest(BaseModel):
    ensemble: str = "nine"
    thetas: Optional[list[float]] = None
    tree_text: str
    keep: Optional[list[int]] = None


class LeafModel(BaseModel):
    record: str
    kind: str
    detail: str
    mass: float
    survivors: list[int]
    max_overlap: float


class ProtocolRunResponse(BaseModel):
    mutual_information: float
    prior_entropy: float
    outcomes: list[str]
    outcome_masses: list[float]
    joint: list[list[float]]
    leaves: list[LeafModel]
    max_leaf_overlap: float


class PosteriorRequest(BaseModel):
    ensemble: str = "nine"
    tree_text: str
    record: list[str]


class PosteriorResponse(BaseModel):
    record: list[str]
    probs: list[float]
    max_residual_overlap: float


class StrategyBuildRequest(BaseModel):
    family: str
    params: list[float] = Field(default_factory=list)
    excluded: int = 4
    evaluate: bool = True


class StrategyBuildResponse(BaseModel):
    family: str
    params: list[float]
    tree_text: str
    mutual_information: Optional[float] = None
    leaves: list[LeafModel] = []


class StrategyOptimizeRequest(BaseModel):
    family: str
    seed: int = 0
    starts: int = 20


class StrategyOptimizeResponse(BaseModel):
    family: str
    params: list[float]
    mutual_information: float
    starts: int
    seed: int


class BoundReportModel(BaseModel):
    epsilon: float
    delta: float
    beta: float
    z: float
    nu: float
    deficit: float


class BoundSweepRequest(BaseModel):
    epsilon_grid: int = 50


class BoundSweepResponse(BaseModel):
    rows: list[BoundReportModel]


class BoundVerifyRequest(BaseModel):
    samples: int = 500
    epsilon: float = 0.005
    delta: float = 0.05
    seed: int = 0


class BoundVerifyResponse(BaseModel):
    requested: int
    attempts: int
    accepted: int
    failures: int
    min_slack: float


class InequalityModel(BaseModel):
    name: str
    lhs: float
    bound: float
    slack: float
    passed: bool


class PairVerifyResponse(BaseModel):
    preconditions_ok: bool
    precondition_notes: list[str]
    all_passed: bool
    results: list[InequalityModel]


class RigidityStepModel(BaseModel):
    name: str
    party: str
    forced: str


class RigidityResponse(BaseModel):
    steps: list[RigidityStepModel]
    solution_params: dict[str, list[float]]
    max_identity_deviation: float
    max_condition_residual: float
    proportional_to_identity: bool
    spread_bound_ok: bool


class DissectRequest(BaseModel):
    ensemble: str
    keep: Optional[list[int]] = None


class DissectResponse(BaseModel):
    ensemble: str
    members: list[str]
    dissectible: bool
    splitting_tree: Optional[str] = None


class AccountingRowModel(BaseModel):
    ensemble: str
    locally_preparable: bool
    locally_measurable: bool
    dissectible: bool
    entropy_prep: float
    entropy_meas: float
    entanglement_prep: float
    entanglement_meas: float
    advice_meas: float


class TableResponse(BaseModel):
    rows: list[AccountingRowModel]


class AdviceRequest(BaseModel):
    priors: list[float]
    hintable: Optional[list[int]] = None


class AdviceResponse(BaseModel):
    hintable: list[int]
    q: list[float]
    cost: float


class QuantumCostResponse(BaseModel):
    variant: str
    qubits: float
    ship_baseline: float


class WeakSimulateRequest(BaseModel):
    alpha0_sq: float = 1.0
    epsilon: float = 0.1
    repetitions: int = 101
    runs: int = 10000
    seed: int = 0


class WeakSimulateResponse(BaseModel):
    runs: int
    empirical_majority0: float
    closed_form_majority0: float
    empirical_correct: float
    closed_form_correct: float
    three_sigma: float
    bernstein_bound: float
    single_weak_correct_prob: float


class HealthResponse(BaseModel):
    status: str
    version: str
