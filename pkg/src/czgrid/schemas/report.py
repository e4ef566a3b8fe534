"""
Pydantic schemas for experiment records and reports
"""
import math
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, computed_field

SCHEMA_VERSION = 1


class Record(BaseModel):
    """Base of every record written to disk"""
    schema_version: int = SCHEMA_VERSION


class GrowthFit(Record):
    """Ball-growth slopes fitted from Monte-Carlo measures"""
    n: int
    samples: int
    seed: int
    small_radii: List[float]
    small_estimates: List[float]
    small_slope: float = Field(..., description="log-log slope, expected n + 1")
    large_radii: List[float]
    large_estimates: List[float]
    large_slope: float = Field(..., description="log-linear slope, expected n")


class SandwichFit(Record):
    """Empirical constant of the ball sandwich B(x_R, r_R) ⊂ R ⊂ B(x_R, κ r_R)"""
    sets: int
    samples: int
    seed: int
    kappa_hat: float
    kappa_hat_half: float
    inner_violations: int
    stable: bool


class DilatedRatio(Record):
    """Monte-Carlo estimate of ρ(R*)/ρ(R) for one set"""
    set: str
    ratio: float
    stderr: float
    kappa_hat: float
    within_bound: bool


class ChainEntryRecord(Record):
    """One line of the grid dump"""
    kind: str = "chain"
    half: str
    j: int
    k: int
    t: str
    r: str
    ext: str
    set: str


class LocatedIdRecord(Record):
    """A located grid set in the grid dump"""
    kind: str = "id"
    x: List[float]
    t: float
    level: int
    id: str
    set: str


class PropertyCheck(Record):
    """Outcome of one verified property"""
    name: str
    checked: int = 0
    violations: int = 0
    details: List[str] = Field(default_factory=list)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return self.violations == 0

    def fail(self, message: str, keep: int = 20) -> None:
        self.violations += 1
        if len(self.details) < keep:
            self.details.append(message)


class GridReport(Record):
    """Machine-checkable report of the grid properties"""
    command: str = "grid"
    n: int
    j_lo: int
    j_hi: int
    seed: int
    trials: int
    windows: List[str]
    properties: List[PropertyCheck]
    parent_ratios: List[str] = Field(default_factory=list, description="distinct ratios seen")
    child_fractions: List[str] = Field(default_factory=list, description="distinct fractions seen")
    literal_child_discrepancies: int = Field(
        0, description="children below ρ(R)/2^n, allowed down to ρ(R)/3"
    )
    literal_ratio_discrepancies: int = Field(0, description="parents above 2^n·ρ(R)")
    growth_fit: Optional[GrowthFit] = None
    sandwich_fit: Optional[SandwichFit] = None
    dilated_ratios: List[DilatedRatio] = Field(default_factory=list)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.properties)


class MaximalRecord(Record):
    """One measurement of a maximal-function experiment"""
    command: str = "maximal"
    experiment: str
    seed: int
    trial: int
    parameter: Dict[str, float]
    value: float


class MaximalSummary(Record):
    """Fitted constants of the maximal-function experiments"""
    command: str = "maximal"
    n: int
    seed: int
    trials: int
    weak11_max: float
    weak11_half_max: float
    weak11_stable: bool
    a_p: Dict[str, float]
    a_p_half: Dict[str, float]
    a_p_stable: Dict[str, bool]
    skipped_constant: int
    k_fit: float
    k_fit_other_batch: float
    k_stable: bool
    literal_constant_exceedances: int

    @computed_field  # type: ignore[prop-decorator]
    @property
    def finite(self) -> bool:
        values = [self.weak11_max, self.k_fit, *self.a_p.values()]
        return all(math.isfinite(v) for v in values)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def stable(self) -> bool:
        return self.weak11_stable and self.k_stable and all(self.a_p_stable.values())


class CZDecompositionRecord(Record):
    """Summary of one decomposition"""
    command: str = "czdecomp"
    seed: int
    trial: int
    alpha: float
    alpha_multiplier: float
    bad_sets: int
    covering_measure: float
    l1_over_alpha: float
    good_sup_over_alpha: float
    max_average_ratio: float
    reconstruction_error: float
    max_bad_mean: float
    literal_constant_exceedances: int
    violations: List[str] = Field(default_factory=list)


class AtomReport(BaseModel):
    """Outcome of the three atom conditions"""
    valid: bool
    sup_norm: float
    sup_bound: float
    mean: float
    support_measure: float
    violations: List[str] = Field(default_factory=list)


class CounterexampleRecord(Record):
    """One scale of the H¹ versus H¹_D counterexample"""
    command: str = "counterexample"
    ell: int = Field(..., description="side exponent ℓ_j of R_j and E_j")
    k: int = Field(..., description="grid level k_j of R_j and E_j")
    r_set: str
    e_set: str
    union_set: str
    pairing: float
    pairing_numeric: float
    relative_error: float
    h1_upper: float = 1.0
    bmo_upper: float
    h1d_lower: float
    atom_valid: bool


class CounterexampleSummary(Record):
    """Affine fit of the pairings in |ℓ|"""
    command: str = "counterexample"
    records: int
    slope: Optional[float] = Field(None, description="least-squares slope in |ℓ|, needs two scales")
    expected_slope: float
    intercept: Optional[float] = None
    residual: Optional[float] = None
    bmo_upper: float
    bmo_derivation: List[str]
    max_relative_error: float
