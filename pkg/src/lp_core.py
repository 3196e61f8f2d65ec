"""
Covering LPs over client subsets: min sum r_i s.t. sum_{i in N} r_i >= rhs(N), r >= 0.

Builders produce the robust-recovery LP, its reduced and over-constrained
variants, and the M=1 pair-indexed forms. solve_exact is an exact rational
simplex with Bland's rule; no floating point is used anywhere on this path.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from pydantic import TypeAdapter

from src import logging
from src.config import MAX_CLIENTS
from src.errors import CapacityError, DegenerateInstanceError, InputError
from src.instance import DemandTable, Instance, clients_to_mask, mask_to_clients, subsets_of_size
from src.models import ConstraintEntry, LpFamily
from src.quantities import (
    DerivedParams,
    LambdaTable,
    PairTable,
    Relabeling,
    derive_params,
    k_family,
    relabel_general,
    relabel_m1,
)

logger = logging.getLogger(__name__)

_entries_adapter = TypeAdapter(list[ConstraintEntry])


@dataclass(frozen=True)
class Constraint:
    """sum of r_i over the clients in `subset` >= rhs"""

    subset: int
    rhs: int
    group: int | None = None

    @property
    def clients(self) -> list[int]:
        return mask_to_clients(self.subset)


@dataclass(frozen=True)
class LinearProgram:
    """A unit-cost covering LP on N nonnegative variables"""

    n_vars: int
    constraints: tuple[Constraint, ...]
    family: LpFamily | None = None
    _index: dict[int, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        full = (1 << self.n_vars) - 1
        for idx, c in enumerate(self.constraints):
            if c.subset <= 0 or c.subset & ~full or c.subset == full:
                raise InputError(f"constraint subset {c.clients} is not a nonempty proper subset", field="subset")
            if c.rhs < 0:
                raise InputError(f"constraint on {c.clients} has negative rhs {c.rhs}", field="rhs")
            self._index.setdefault(c.subset, idx)

    def __len__(self) -> int:
        return len(self.constraints)

    def find(self, subset: int) -> Constraint | None:
        """First constraint on exactly this subset, if any."""
        idx = self._index.get(subset)
        return None if idx is None else self.constraints[idx]

    def as_set(self) -> set[tuple[int, int]]:
        return {(c.subset, c.rhs) for c in self.constraints}

    def to_entries(self) -> list[ConstraintEntry]:
        return [ConstraintEntry(subset=c.clients, rhs=c.rhs) for c in self.constraints]

    @classmethod
    def from_entries(cls, n_vars: int, entries: list[ConstraintEntry]) -> "LinearProgram":
        return cls(n_vars, tuple(Constraint(clients_to_mask(e.subset), e.rhs) for e in entries))

    def dumps(self) -> str:
        return _entries_adapter.dump_json(self.to_entries()).decode()


@dataclass(frozen=True)
class LpSolution:
    """Optimal primal/dual pair with the final basis"""

    value: Fraction
    r: tuple[Fraction, ...]
    tight: tuple[int, ...]
    basis: tuple[int, ...]
    dual: tuple[Fraction, ...]
    pivots: int


@dataclass(frozen=True)
class Violation:
    """A constraint the schedule misses; slack = lhs - rhs < 0"""

    index: int
    clients: list[int]
    rhs: int
    lhs: Fraction
    slack: Fraction


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def _check_capacity(inst: Instance) -> None:
    if inst.n_clients > MAX_CLIENTS:
        raise CapacityError(
            f"N={inst.n_clients} exceeds the enumeration cap of {MAX_CLIENTS} clients",
            field="n_clients",
        )
    if inst.p_divisor < 1:
        raise DegenerateInstanceError(
            f"degenerate instance: N={inst.n_clients} < M+2={inst.n_unreliable + 2}", field="n_clients"
        )


def build_full(inst: Instance) -> LinearProgram:
    """
    Robust-recovery LP: one constraint per N with 1 <= |N| <= P and
    rhs = max over I in comp(N), |I| = M, of demand_count(comp(N) minus I, I).
    """
    _check_capacity(inst)
    table = DemandTable(inst)
    constraints = []
    for size in range(1, inst.p_divisor + 1):
        for mask in subsets_of_size(inst.n_clients, size):
            constraints.append(Constraint(mask, table.rhs(mask)))

    expected = sum(comb(inst.n_clients, v) for v in range(1, inst.p_divisor + 1))
    assert len(constraints) == expected
    logger.info(f"Built full LP: N={inst.n_clients} M={inst.n_unreliable}, {len(constraints)} constraints")
    return LinearProgram(inst.n_clients, tuple(constraints), LpFamily.FULL)


def build_reduced(inst: Instance) -> LinearProgram:
    """Only |N| = P, with rhs = max over i outside N of |X̄_{i, comp(N) minus i}|."""
    _check_capacity(inst)
    table = DemandTable(inst)
    constraints = tuple(
        Constraint(mask, table.reduced_rhs(mask)) for mask in subsets_of_size(inst.n_clients, inst.p_divisor)
    )
    return LinearProgram(inst.n_clients, constraints, LpFamily.REDUCED)


def build_overconstrained_general(inst: Instance, params: DerivedParams, k: list[int]) -> LinearProgram:
    """
    Family j (1 <= j <= N-M): every size-P subset N avoiding j and containing
    1..j-1 gets rhs k_j. The families partition the size-P subsets by
    j = min comp(N).
    """
    _check_capacity(inst)
    n, size = inst.n_clients, params.P
    if len(k) != n - inst.n_unreliable:
        raise InputError(f"expected {n - inst.n_unreliable} k values, got {len(k)}", field="k")

    constraints = []
    for j in range(1, n - inst.n_unreliable + 1):
        forced = clients_to_mask(range(1, j))
        pool = inst.all_clients & ~forced & ~(1 << (j - 1))
        for extra in subsets_of_size(n, size - (j - 1), within=pool):
            constraints.append(Constraint(forced | extra, k[j - 1], group=j))

    masks = [c.subset for c in constraints]
    assert len(masks) == len(set(masks)) == comb(n, size), "constraint families do not partition the size-P subsets"
    return LinearProgram(n, tuple(constraints), LpFamily.OVER_GENERAL)


def _pair_mask(inst: Instance, m: int, n: int) -> int:
    return inst.all_clients & ~(1 << (m - 1)) & ~(1 << (n - 1))


def build_m1_full(inst: Instance) -> LinearProgram:
    """M = 1: sum over N_{m,n} = [N] minus {m, n} of r_i >= k_{m,n}, for all m < n."""
    if inst.n_unreliable != 1:
        raise InputError(f"m1 LPs need M = 1 (got M={inst.n_unreliable})", field="n_unreliable")
    _check_capacity(inst)
    k = PairTable(inst)
    n = inst.n_clients
    constraints = tuple(
        Constraint(_pair_mask(inst, a, b), k[a, b]) for a in range(1, n + 1) for b in range(a + 1, n + 1)
    )
    return LinearProgram(n, constraints, LpFamily.M1_FULL)


def build_m1_overconstrained(inst: Instance, params: DerivedParams) -> LinearProgram:
    """Same subsets as build_m1_full with rhs lambda_{m,n}."""
    if inst.n_unreliable != 1:
        raise InputError(f"m1 LPs need M = 1 (got M={inst.n_unreliable})", field="n_unreliable")
    _check_capacity(inst)
    lam = LambdaTable(inst, params)
    n = inst.n_clients
    constraints = tuple(
        Constraint(_pair_mask(inst, a, b), lam[a, b]) for a in range(1, n + 1) for b in range(a + 1, n + 1)
    )
    return LinearProgram(n, constraints, LpFamily.M1_OVER)


def build_lp(inst: Instance, family: LpFamily | str) -> tuple[LinearProgram, Relabeling]:
    """
    Build any LP family by name.

    The over-constrained and pair-indexed families are defined on relabeled
    clients, so the LP comes back in those coordinates together with the
    relabeling; full and reduced use the identity.
    """
    family = LpFamily(family)
    if family is LpFamily.FULL:
        return build_full(inst), Relabeling.identity(inst.n_clients)
    if family is LpFamily.REDUCED:
        return build_reduced(inst), Relabeling.identity(inst.n_clients)

    params = derive_params(inst.n_clients, inst.n_unreliable)
    if family is LpFamily.OVER_GENERAL:
        relabeling = relabel_general(inst)
        ordered = inst.permuted(list(relabeling.order))
        return build_overconstrained_general(ordered, params, k_family(ordered, params)), relabeling

    relabeling = relabel_m1(inst)
    ordered = inst.permuted(list(relabeling.order))
    if family is LpFamily.M1_FULL:
        return build_m1_full(ordered), relabeling
    return build_m1_overconstrained(ordered, params), relabeling



# ---------------------------------------------------------------------------
# Exact simplex
# ---------------------------------------------------------------------------

class _DualTableau:
    """
    Tableau of max b.y s.t. A^T y <= 1, y >= 0, the dual of the covering LP.

    Rows are clients, columns are the m constraint duals followed by the N
    slacks. The all-slack basis is feasible because every row bound is 1.
    """

    def __init__(self, lp: LinearProgram):
        n, m = lp.n_vars, len(lp.constraints)
        self.n, self.m = n, m
        self.rows = [[Fraction(0)] * (m + n) for _ in range(n)]
        for col, c in enumerate(lp.constraints):
            for client in c.clients:
                self.rows[client - 1][col] = Fraction(1)
        for i in range(n):
            self.rows[i][m + i] = Fraction(1)
        self.beta = [Fraction(1)] * n
        self.cost = [Fraction(c.rhs) for c in lp.constraints] + [Fraction(0)] * n
        self.reduced = [-c for c in self.cost]
        self.basis = [m + i for i in range(n)]

    def entering(self, order: range) -> int | None:
        for col in order:
            if self.reduced[col] < 0:
                return col
        return None

    def leaving(self, col: int, reverse: bool) -> int | None:
        best_row, best_ratio = None, None
        for i, row in enumerate(self.rows):
            if row[col] > 0:
                ratio = self.beta[i] / row[col]
                if best_ratio is None or ratio < best_ratio:
                    best_row, best_ratio = i, ratio
                elif ratio == best_ratio:
                    # Bland: among tied rows, the basic variable first in the pivot order leaves
                    if (self.basis[i] > self.basis[best_row]) if reverse else (self.basis[i] < self.basis[best_row]):
                        best_row = i
        return best_row

    def pivot(self, row_idx: int, col: int) -> None:
        row = self.rows[row_idx]
        piv = row[col]
        support = [j for j, v in enumerate(row) if v != 0]
        for j in support:
            row[j] /= piv
        self.beta[row_idx] /= piv

        for i, other in enumerate(self.rows):
            if i != row_idx and other[col] != 0:
                f = other[col]
                for j in support:
                    other[j] -= f * row[j]
                self.beta[i] -= f * self.beta[row_idx]

        f = self.reduced[col]
        for j in support:
            self.reduced[j] -= f * row[j]
        self.basis[row_idx] = col


def solve_exact(lp: LinearProgram, pivot: str = "bland") -> LpSolution:
    """
    Solve the covering LP exactly.

    Args:
        lp: nonempty covering LP
        pivot: "bland" scans variables in index order, "bland-reverse" in
            the reverse order; both are anti-cycling and must agree on the
            optimal value

    Returns:
        Optimal value, primal r, tight constraints, basis and dual values
    """
    if not lp.constraints:
        raise InputError("cannot solve an LP without constraints", field="constraints")
    if lp.n_vars > MAX_CLIENTS:
        raise CapacityError(f"LP with {lp.n_vars} variables exceeds the cap of {MAX_CLIENTS}", field="n_vars")
    if pivot not in ("bland", "bland-reverse"):
        raise InputError(f"unknown pivot rule '{pivot}'", field="pivot")

    tab = _DualTableau(lp)
    reverse = pivot == "bland-reverse"
    order = range(tab.m + tab.n - 1, -1, -1) if reverse else range(tab.m + tab.n)
    pivots = 0

    while (col := tab.entering(order)) is not None:
        row = tab.leaving(col, reverse)
        # A dual ray would mean the covering LP is infeasible, impossible with nonempty subsets
        assert row is not None, "covering LP dual is unbounded"
        tab.pivot(row, col)
        pivots += 1

    r = tuple(tab.reduced[tab.m + i] for i in range(tab.n))
    dual = [Fraction(0)] * tab.m
    for i, col in enumerate(tab.basis):
        if col < tab.m:
            dual[col] = tab.beta[i]
    value = sum(r, Fraction(0))
    dual_value = sum((tab.cost[j] * y for j, y in enumerate(dual)), Fraction(0))
    assert value == dual_value, f"primal {value} and dual {dual_value} objectives differ"

    tight = tuple(
        idx for idx, c in enumerate(lp.constraints) if sum((r[i - 1] for i in c.clients), Fraction(0)) == c.rhs
    )
    logger.info(f"Solved LP ({len(lp)} constraints, {pivots} pivots, {pivot}): optimum {value}")
    return LpSolution(value=value, r=r, tight=tight, basis=tuple(tab.basis), dual=tuple(dual), pivots=pivots)


def _values_of(schedule) -> Sequence[Fraction]:
    return getattr(schedule, "values", schedule)


def check_feasible(lp: LinearProgram, schedule) -> list[Violation]:
    """
    Exact per-constraint check.

    Args:
        lp: the LP, in the same client labels as the schedule
        schedule: a Schedule or a sequence of N rationals

    Returns:
        One Violation per unmet constraint; empty means feasible
    """
    values = _values_of(schedule)
    if len(values) != lp.n_vars:
        raise InputError(f"schedule has {len(values)} entries, LP has {lp.n_vars} clients", field="schedule")
    violations = []
    for idx, c in enumerate(lp.constraints):
        lhs = sum((Fraction(values[i - 1]) for i in c.clients), Fraction(0))
        if lhs < c.rhs:
            violations.append(Violation(idx, c.clients, c.rhs, lhs, lhs - c.rhs))
    return violations


def verify_certificate(lp: LinearProgram, solution: LpSolution) -> list[str]:
    """
    Re-check an LpSolution without the tableau: primal feasibility, dual
    feasibility, and equal objectives. Returns a list of problems.
    """
    problems = []
    if any(v < 0 for v in solution.r):
        problems.append("negative primal component")
    for v in check_feasible(lp, solution.r):
        problems.append(f"constraint {v.clients} violated by {v.slack}")

    if any(y < 0 for y in solution.dual):
        problems.append("negative dual component")
    load = [Fraction(0)] * lp.n_vars
    for y, c in zip(solution.dual, lp.constraints):
        for i in c.clients:
            load[i - 1] += y
    for i, total in enumerate(load, start=1):
        if total > 1:
            problems.append(f"dual load {total} > 1 on client {i}")

    primal = sum(solution.r, Fraction(0))
    dual = sum((y * c.rhs for y, c in zip(solution.dual, lp.constraints)), Fraction(0))
    if primal != solution.value or dual != solution.value:
        problems.append(f"objectives differ: primal {primal}, dual {dual}, reported {solution.value}")
    return problems
