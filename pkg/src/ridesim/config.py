"""Configuration models for ridesim runs."""

from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, field_validator


class LastStopStrategy(str, Enum):
    """How distances from last stops to PD-locations are computed."""
    DIJKSTRA = "dijkstra"
    INDIVIDUAL_BCH = "individual-bch"
    COLLECTIVE_BCH = "collective-bch"


class CostParameters(BaseModel):
    """Cost model and constraint parameters (times in deciseconds)."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    max_wait: NonNegativeInt = Field(6000, description="Maximum wait time t^max_wait")
    stop_time: NonNegativeInt = Field(600, description="Minimum stop duration t_stop^min")
    alpha: float = Field(1.7, description="Trip-time constraint factor on the direct drive time")
    beta: NonNegativeInt = Field(1200, description="Trip-time constraint offset")
    gamma_wait: NonNegativeInt = Field(1, description="Wait-time violation penalty scale")
    gamma_trip: NonNegativeInt = Field(10, description="Trip-time violation penalty scale")
    trip_weight: NonNegativeInt = Field(1, description="Weight of trip times in the cost")
    walk_weight: NonNegativeInt = Field(0, description="Weight of walking times in the cost")
    walk_radius: NonNegativeInt = Field(0, description="Walking radius rho for PD-locations")

    @field_validator("alpha")
    @classmethod
    def alpha_must_be_non_negative(cls, v):
        """Ensure the trip-time factor is non-negative."""
        if v < 0:
            raise ValueError("alpha must be non-negative")
        return v


class SearchConfig(BaseModel):
    """Strategy selection, bundling widths and pruning toggles."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    strategy_pals: LastStopStrategy = Field(LastStopStrategy.COLLECTIVE_BCH, description="PALS strategy")
    strategy_dals: LastStopStrategy = Field(LastStopStrategy.COLLECTIVE_BCH, description="DALS strategy")
    k_elliptic: int = Field(16, ge=1, description="Lanes of bundled elliptic searches")
    k_pd: int = Field(32, ge=1, description="Lanes of bundled PD-distance searches")
    k_last_stop_bch: int = Field(8, ge=1, description="Lanes of bundled last-stop BCH searches")
    k_last_stop_dijkstra: int = Field(64, ge=1, description="Lanes of bundled last-stop Dijkstra searches")
    sorted_buckets: bool = Field(True, description="Keep buckets sorted and stop scans early")
    elliptic_truncation: bool = Field(True, description="Truncate elliptic entry generation at the leeway")
    pd_radius_pruning: bool = Field(True, description="Truncate PD-distance searches at the PD bound")
    cost_pruning: bool = Field(True, description="Prune last-stop searches by cost bounds")
    domination_pruning: bool = Field(True, description="Prune collective labels by domination")


class RunConfig(BaseModel):
    """Complete configuration of a simulation run."""
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    network: Path = Field(..., description="Network file")
    vehicles: Path = Field(..., description="Vehicle file")
    requests: Path = Field(..., description="Request file")
    ch_cache: Optional[Path] = Field(None, description="Directory holding cached CHs")
    output: Path = Field(Path("results"), description="Output directory")
    cost: CostParameters = Field(default_factory=CostParameters)
    search: SearchConfig = Field(default_factory=SearchConfig)
    verify_oracle: bool = Field(False, description="Cross-check every dispatch against brute force")
    counters: bool = Field(False, description="Record search counters in the outputs")

    def resolve_paths(self, base: Path) -> "RunConfig":
        """Return a copy with relative paths anchored at base."""
        updates = {}
        for name in ("network", "vehicles", "requests", "ch_cache", "output"):
            value = getattr(self, name)
            if value is not None and not value.is_absolute():
                updates[name] = base / value
        return self.model_copy(update=updates)
