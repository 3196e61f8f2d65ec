"""
Transmission schedules: exact rationals on the 1/P grid, the closed-form
constructions, and the JSON schedule format.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from pathlib import Path
from typing import Optional, Sequence

from src import logging
from src.errors import ClosedFormRegimeError, InputError
from src.instance import Instance, missing_set
from src.lp_core import LpSolution, build_lp, solve_exact
from src.models import LpFamily, Provenance, ScheduleFile, validate_model
from src.quantities import (
    DerivedParams,
    PairTable,
    Relabeling,
    derive_params,
    k_family,
    relabel_general,
    relabel_m1,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Schedule:
    """Per-client transmission amounts r_i in original client labels"""

    p_divisor: int
    values: tuple[Fraction, ...]
    provenance: Provenance
    relabeling: Optional[Relabeling] = None

    def __post_init__(self):
        if self.p_divisor < 1:
            raise InputError(f"p_divisor must be >= 1 (got {self.p_divisor})", field="p_divisor")
        for i, v in enumerate(self.values, start=1):
            if v < 0:
                raise InputError(f"r_{i} = {v} is negative", field="values")
            if (v * self.p_divisor).denominator != 1:
                raise InputError(f"r_{i} = {v} is not a multiple of 1/{self.p_divisor}", field="values")
        if self.relabeling is not None and len(self.relabeling.order) != len(self.values):
            raise InputError("relabeling length does not match the schedule", field="relabeling")

    @property
    def counts(self) -> list[int]:
        """r_i * P, the number of chunks each client sends."""
        return [int(v * self.p_divisor) for v in self.values]

    def relabeled_values(self) -> list[Fraction]:
        if self.relabeling is None:
            return list(self.values)
        return self.relabeling.to_relabeled(list(self.values))


@dataclass(frozen=True)
class ClosedForm:
    """
    Raw closed-form evaluation, before the sign check.

    `relabeled` is indexed by new labels, `values` by original clients.
    """

    params: DerivedParams
    relabeling: Relabeling
    r_tilde: Fraction
    relabeled: tuple[Fraction, ...]
    values: tuple[Fraction, ...]
    provenance: Provenance

    @property
    def total(self) -> Fraction:
        return sum(self.values, Fraction(0))

    @property
    def negative(self) -> list[int]:
        """Original client indices with a negative component."""
        return [i for i, v in enumerate(self.values, start=1) if v < 0]

    def to_schedule(self) -> Schedule:
        if self.negative:
            raise ClosedFormRegimeError(
                f"closed form out of regime: negative components at clients {self.negative}",
                values=list(self.values),
            )
        return Schedule(self.params.P, self.values, self.provenance, self.relabeling)


def _finish(
    params: DerivedParams, relabeling: Relabeling, r_tilde: Fraction, relabeled: list[Fraction], provenance: Provenance
) -> ClosedForm:
    values = relabeling.to_original(relabeled)
    form = ClosedForm(params, relabeling, r_tilde, tuple(relabeled), tuple(values), provenance)
    logger.info(f"Closed form {provenance.value} (N={params.n_clients}, M={params.n_unreliable}): total {form.total}")
    return form


def closed_form_m0_values(inst: Instance) -> ClosedForm:
    """r_i = sum_j |X̄_j| / (N-1) - |X̄_i| for perfectly reliable clients."""
    if inst.n_unreliable != 0:
        raise InputError(f"closed_form_m0 needs M = 0 (got M={inst.n_unreliable})", field="n_unreliable")
    params = derive_params(inst.n_clients, 0)
    missing = [len(missing_set(inst, i)) for i in range(1, inst.n_clients + 1)]
    r_tilde = Fraction(sum(missing), inst.n_clients - 1)
    relabeled = [r_tilde - m for m in missing]
    return _finish(params, Relabeling.identity(inst.n_clients), r_tilde, relabeled, Provenance.CLOSED_M0)


def closed_form_general_values(inst: Instance) -> ClosedForm:
    relabeling = relabel_general(inst)
    ordered = inst.permuted(list(relabeling.order))
    params = derive_params(inst.n_clients, inst.n_unreliable)
    n, P, Q = params.n_clients, params.P, params.Q
    k = k_family(ordered, params)
    head, k_next = k[:Q], k[Q]

    r_tilde = Fraction(sum(head), P) + Fraction(P - Q + 1, P) * k_next
    relabeled = [r_tilde - k[i] for i in range(Q)] + [r_tilde - k_next] * (n - Q)

    expected = Fraction(n - P, P) * sum(head) + Fraction(n + Q * (P - n), P) * k_next
    assert sum(relabeled) == expected, f"general total {sum(relabeled)} != identity {expected}"
    assert all(a <= b for a, b in zip(relabeled, relabeled[1:])), f"closed form not nondecreasing: {relabeled}"
    return _finish(params, relabeling, r_tilde, relabeled, Provenance.CLOSED_GENERAL)


def closed_form_m1_values(inst: Instance) -> ClosedForm:
    if inst.n_unreliable != 1:
        raise InputError(f"closed_form_m1 needs M = 1 (got M={inst.n_unreliable})", field="n_unreliable")
    relabeling = relabel_m1(inst)
    ordered = inst.permuted(list(relabeling.order))
    params = derive_params(inst.n_clients, 1)
    n, P, Q, R, b = params.n_clients, params.P, params.Q, params.R, params.boundary
    k = PairTable(ordered)

    r_tilde = (
        Fraction(sum(k[i, n] for i in range(1, b)), P)
        + Fraction(Q, P) * k[b, n]
        + Fraction(sum(k[1, i] for i in range(b + 1, n)), P)
        + Fraction(b - 1, P) * k[1, b]
    )
    relabeled = [r_tilde - k[i, n] - k[1, b] for i in range(1, b + 1)]
    relabeled += [r_tilde - k[b, n] - k[1, i] for i in range(b + 1, n + 1)]

    expected = (
        Fraction(2 - P, P) * k[1, n]
        + Fraction(2, P) * sum(k[i, n] for i in range(2, b))
        + Fraction(R, P) * k[b, n]
        + Fraction(2, P) * sum(k[1, i] for i in range(b + 1, n))
        + Fraction(2 - R, P) * k[1, b]
    )
    assert sum(relabeled) == expected, f"M=1 total {sum(relabeled)} != identity {expected}"
    return _finish(params, relabeling, r_tilde, relabeled, Provenance.CLOSED_M1)


def closed_form_m0(inst: Instance) -> Schedule:
    return closed_form_m0_values(inst).to_schedule()


def closed_form_general(inst: Instance) -> Schedule:
    return closed_form_general_values(inst).to_schedule()


def closed_form_m1(inst: Instance) -> Schedule:
    return closed_form_m1_values(inst).to_schedule()


def total(schedule: Schedule | Sequence[Fraction]) -> Fraction:
    values = schedule.values if isinstance(schedule, Schedule) else schedule
    return sum((Fraction(v) for v in values), Fraction(0))


def round_to_grid(
    values: Sequence[Fraction],
    p_divisor: int,
    provenance: Provenance = Provenance.GRID,
    relabeling: Optional[Relabeling] = None,
) -> Schedule:
    """Round every component up to the nearest multiple of 1/P."""
    if p_divisor < 1:
        raise InputError(f"p_divisor must be >= 1 (got {p_divisor})", field="p_divisor")
    if any(Fraction(v) < 0 for v in values):
        raise InputError("cannot round a vector with negative components", field="values")
    rounded = tuple(Fraction(ceil(Fraction(v) * p_divisor), p_divisor) for v in values)
    return Schedule(p_divisor, rounded, provenance, relabeling)


def lp_schedule(
    inst: Instance, which: LpFamily | str = LpFamily.FULL, pivot: str = "bland"
) -> tuple[Schedule, LpSolution]:
    """
    Solve one LP family exactly and return its optimum as a grid schedule in
    original client labels, together with the raw solution (relabeled labels).
    """
    lp, relabeling = build_lp(inst, which)
    solution = solve_exact(lp, pivot=pivot)
    values = relabeling.to_original(list(solution.r))
    schedule = round_to_grid(
        values, inst.p_divisor, Provenance.LP_EXACT, None if relabeling.is_identity else relabeling
    )
    if total(schedule) != solution.value:
        logger.warning(f"LP optimum {solution.value} is off the 1/{inst.p_divisor} grid; rounded to {total(schedule)}")
    return schedule, solution


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def to_file(schedule: Schedule) -> ScheduleFile:
    return ScheduleFile(
        p_divisor=schedule.p_divisor,
        counts=schedule.counts,
        provenance=schedule.provenance,
        relabeling=None if schedule.relabeling is None else list(schedule.relabeling.order),
    )


def from_file(data: ScheduleFile) -> Schedule:
    relabeling = None if data.relabeling is None else Relabeling(tuple(data.relabeling))
    values = tuple(Fraction(c, data.p_divisor) for c in data.counts)
    return Schedule(data.p_divisor, values, data.provenance, relabeling)


def loads(text: str) -> Schedule:
    return from_file(validate_model(ScheduleFile, text))


def dumps(schedule: Schedule) -> str:
    return to_file(schedule).model_dump_json()


def load(path: str | Path) -> Schedule:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"Cannot read schedule file {path}: {e}", field="path") from e
    return loads(text)


def save(schedule: Schedule, path: str | Path) -> None:
    Path(path).write_text(dumps(schedule))
    logger.info(f"Saved schedule ({schedule.provenance.value}, total {total(schedule)}) to {path}")
