"""
Pydantic models for the toolkit's JSON and CSV artifacts.
Every file format carries a "version" field; rationals travel as "num/den" strings.
"""

from enum import Enum
from fractions import Fraction
from typing import Literal, Optional, TypeVar

from pydantic import BaseModel, Field, ValidationError, ValidationInfo, field_validator

from src.errors import InputError


class Provenance(str, Enum):
    """Which closed form or solver produced a schedule"""

    CLOSED_GENERAL = "closed-general"
    CLOSED_M1 = "closed-m1"
    CLOSED_M0 = "closed-m0"
    LP_EXACT = "lp-exact"
    GRID = "grid"


class LpFamily(str, Enum):
    """The LP families that can be built from an instance"""

    FULL = "full"
    REDUCED = "reduced"
    OVER_GENERAL = "over-general"
    M1_FULL = "m1-full"
    M1_OVER = "m1-over"


class WitnessKind(str, Enum):
    """Dual witness constructions"""

    GENERAL = "general"
    M1 = "m1"


def format_fraction(value: Fraction) -> str:
    """Serialize a rational as "num/den" (denominator always present)."""
    return f"{value.numerator}/{value.denominator}"


def parse_fraction(text: str) -> Fraction:
    """Parse a "num/den" or integer string back into a Fraction."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"Malformed rational '{text}': {e}") from e


class InstanceFile(BaseModel):
    """Instance JSON: who holds which packets"""

    version: Literal[1] = 1
    n_clients: int = Field(ge=1)
    n_unreliable: int = Field(ge=0)
    n_packets: int = Field(ge=1)
    alpha: Optional[float] = None
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    sets: list[list[int]]

    @field_validator("n_unreliable")
    @classmethod
    def _unreliable_below_clients(cls, value: int, info: ValidationInfo) -> int:
        n_clients = info.data.get("n_clients")
        if n_clients is not None and value >= n_clients:
            raise ValueError(f"n_unreliable must be < n_clients ({n_clients})")
        return value

    @field_validator("alpha")
    @classmethod
    def _alpha_open_interval(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not 0.0 < value < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        return value

    @field_validator("sets")
    @classmethod
    def _sets_cover_ground(cls, value: list[list[int]], info: ValidationInfo) -> list[list[int]]:
        n_clients = info.data.get("n_clients")
        n_packets = info.data.get("n_packets")
        if n_clients is None or n_packets is None:
            return value
        if len(value) != n_clients:
            raise ValueError(f"expected {n_clients} sets, got {len(value)}")

        covered = set()
        for client, packets in enumerate(value, start=1):
            if any(b <= a for a, b in zip(packets, packets[1:])):
                raise ValueError(f"set of client {client} is not strictly sorted")
            for p in packets:
                if not 0 <= p < n_packets:
                    raise ValueError(f"packet index {p} of client {client} out of range [0, {n_packets})")
            covered.update(packets)

        if len(covered) != n_packets:
            missing = min(set(range(n_packets)) - covered)
            raise ValueError(f"uncovered packet {missing}: held by no client")
        return value


class ScheduleFile(BaseModel):
    """Schedule JSON: counts are r_i * P, so every entry is an integer"""

    version: Literal[1] = 1
    p_divisor: int = Field(ge=1)
    counts: list[int]
    provenance: Provenance
    relabeling: Optional[list[int]] = None

    @field_validator("counts")
    @classmethod
    def _counts_nonnegative(cls, value: list[int]) -> list[int]:
        if any(c < 0 for c in value):
            raise ValueError("transmission counts must be nonnegative")
        return value


class ConstraintEntry(BaseModel):
    """One covering constraint: sum of r_i over subset >= rhs"""

    subset: list[int]
    rhs: int = Field(ge=0)


class WitnessFamily(BaseModel):
    """Partition block S^(j) of a dual witness"""

    index: int
    members: list[list[int]]


class WitnessDump(BaseModel):
    """Witness dump with its dual check"""

    version: Literal[1] = 1
    kind: WitnessKind
    n_clients: int
    n_unreliable: int
    p_divisor: int
    q: int
    r: int
    families: list[WitnessFamily]
    membership: list[int]
    dual_feasible: bool
    tight: bool
    objective: str
    closed_total: Optional[str] = None
    gap: Optional[str] = None


class ClientVerdict(BaseModel):
    """Decode outcome of one reliable client"""

    client: int
    success: bool
    missing_chunks: int


class AdversaryVerdict(BaseModel):
    """Decode outcomes for one choice of unreliable set"""

    unreliable: list[int]
    clients: list[ClientVerdict]

    @property
    def success(self) -> bool:
        return all(c.success for c in self.clients)


class SimulationReportFile(BaseModel):
    """Report JSON produced by the coding simulation"""

    version: Literal[1] = 1
    field_bits: int
    seed: int
    attempts: int
    persistent_failure: bool
    verdicts: list[AdversaryVerdict]


class SweepRow(BaseModel):
    """One CSV row of the convergence sweep"""

    seed: int
    N: int
    M: int
    K: int
    alpha: float
    method: str
    closed_total: str
    lp_opt: str
    gap_per_packet: float
    feasible_for_full: bool


_ModelT = TypeVar("_ModelT", bound=BaseModel)


def validate_model(model: type[_ModelT], text: str) -> _ModelT:
    """
    Parse JSON text into a model, converting pydantic errors into InputError.

    The first error's location becomes the InputError field so the CLI can
    name the offending entry.
    """
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or None
        raise InputError(f"Invalid {model.__name__}: {first['msg']}", field=field) from e
