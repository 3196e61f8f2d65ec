"""
Explicit dual witnesses for the over-constrained LPs.

A witness is a list of client subsets, each carrying dual weight 1/P, split
into families S^(1) .. S^(Q+1). Every client lies in exactly P members, so
the dual load is 1 everywhere, and the dual objective sum(rhs)/P matches the
closed-form total. All subsets are in relabeled coordinates.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from src import logging
from src.errors import InputError, WitnessMismatchError
from src.instance import clients_to_mask, mask_to_clients
from src.lp_core import LinearProgram
from src.models import WitnessDump, WitnessFamily, WitnessKind, format_fraction
from src.quantities import DerivedParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DualWitness:
    kind: WitnessKind
    params: DerivedParams
    families: tuple[tuple[int, ...], ...]

    @property
    def weight(self) -> Fraction:
        return Fraction(1, self.params.P)

    @property
    def members(self) -> list[int]:
        return [mask for family in self.families for mask in family]

    def membership(self) -> list[int]:
        """Number of members containing each client, 1-based order."""
        counts = [0] * self.params.n_clients
        for mask in self.members:
            for c in mask_to_clients(mask):
                counts[c - 1] += 1
        return counts


@dataclass(frozen=True)
class WitnessCheck:
    dual_feasible: bool
    tight: bool
    objective: Fraction
    loads: tuple[Fraction, ...]


def _assert_membership(witness: DualWitness) -> None:
    counts = witness.membership()
    P = witness.params.P
    assert all(c == P for c in counts), f"witness membership {counts} is not uniformly P={P}"
    for mask in witness.members:
        size = len(mask_to_clients(mask))
        assert size == P, f"witness member {mask_to_clients(mask)} has size {size} != P={P}"


# ---------------------------------------------------------------------------
# General M
# ---------------------------------------------------------------------------

def _xi(m: int, params: DerivedParams) -> int:
    head = (params.n_unreliable + 1) * params.Q
    return 0 if m <= head else head - m


def construct_witness_general(params: DerivedParams) -> DualWitness:
    """
    Greedy witness for the general over-constrained LP.

    Family j <= Q forces {1..Q} minus j and fills P-Q+1 slots from
    {Q+1..N}; family Q+1 forces {1..Q}, excludes Q+1 and fills P-Q slots
    from {Q+2..N}. Slots go to the clients with the least laxity (eligible
    rounds left minus missing memberships), then the smallest counter, then
    the smallest index.
    """
    n, M, P, Q, R = params.n_clients, params.n_unreliable, params.P, params.Q, params.R
    head_rounds = (M + 1) * Q
    total_rounds = head_rounds + (M - R + 1)
    pool = list(range(Q + 1, n + 1))
    counter = {c: 0 for c in pool}

    def rounds_left(c: int, step: int) -> int:
        last = head_rounds if c == Q + 1 else total_rounds
        return max(0, last - step)

    families: list[tuple[int, ...]] = []
    step = 0
    for j in range(1, Q + 2):
        forced = [c for c in range(1, Q + 1) if c != j]
        rounds = M + 1 if j <= Q else M - R + 1
        slots = P - len(forced)
        members = []
        for _ in range(rounds):
            eligible = [c for c in pool if c != j and counter[c] < P and rounds_left(c, step) > 0]
            eligible.sort(key=lambda c: (rounds_left(c, step) - (P - counter[c]), counter[c], c))
            assert len(eligible) >= slots, f"witness family {j} has {len(eligible)} candidates for {slots} slots"
            chosen = eligible[:slots]
            for c in chosen:
                counter[c] += 1
            members.append(clients_to_mask(forced + chosen))
            step += 1

            audit = sum(counter.values())
            assert audit == step * (P - Q + 1) + _xi(step, params), f"counter audit failed at step {step}: {audit}"
        families.append(tuple(members))

    saturated = sum(1 for c in pool if counter[c] == P)
    assert saturated == n - Q, f"only {saturated} of {n - Q} pool clients reached P={P}"

    witness = DualWitness(WitnessKind.GENERAL, params, tuple(families))
    for j, family in enumerate(witness.families, start=1):
        expected = M + 1 if j <= Q else M - R + 1
        assert len(family) == expected, f"family {j} has {len(family)} members, expected {expected}"
        prefix = clients_to_mask(range(1, j))
        for mask in family:
            assert not mask & (1 << (j - 1)), f"family {j} member {mask_to_clients(mask)} contains {j}"
            assert mask & prefix == prefix, f"family {j} member {mask_to_clients(mask)} misses a lower label"
    _assert_membership(witness)
    logger.debug(f"General witness N={n} M={M}: {[[mask_to_clients(m) for m in f] for f in witness.families]}")
    return witness


# ---------------------------------------------------------------------------
# M = 1
# ---------------------------------------------------------------------------

def _pair_member(n_clients: int, m: int, n: int) -> int:
    assert 1 <= m < n <= n_clients, f"invalid witness pair ({m}, {n})"
    full = (1 << n_clients) - 1
    return full & ~(1 << (m - 1)) & ~(1 << (n - 1))


def witness_pairs_m1(params: DerivedParams) -> list[list[tuple[int, int]]]:
    """Excluded pairs (m, n) of every family, as tabulated for the four (Q, R) cases."""
    n, Q, R = params.n_clients, params.Q, params.R
    families: list[list[tuple[int, int]]] = []
    last = Q + 1 if R == 0 else Q

    if Q % 2 == 1:
        half = (Q + 1) // 2
        for j in range(1, half + 1):
            families.append([(2 * j - 1, n - j + 1), (2 * j, n - j + 1)])
        for j in range(half + 1, last + 1):
            families.append([(2 * j - Q - 2, n - j + 1), (2 * j - Q - 1, n - j + 1)])
    else:
        half = Q // 2
        for j in range(1, half + 1):
            families.append([(2 * j - 1, n - j + 1), (2 * j, n - j + 1)])
        families.append([(Q + 1, n - half), (1, n - half)])
        for j in range(half + 2, last + 1):
            families.append([(2 * j - Q - 2, n - j + 1), (2 * j - Q - 1, n - j + 1)])

    if R == 1:
        families.append([(Q, n - Q)])
    return [[(min(a, b), max(a, b)) for a, b in family] for family in families]


def construct_witness_m1(params: DerivedParams) -> DualWitness:
    if params.n_unreliable != 1:
        raise InputError(f"M=1 witness needs M = 1 (got M={params.n_unreliable})", field="n_unreliable")
    pairs = witness_pairs_m1(params)
    families = tuple(tuple(_pair_member(params.n_clients, m, n) for m, n in family) for family in pairs)
    witness = DualWitness(WitnessKind.M1, params, families)
    assert len(families) == params.Q + 1, f"M=1 witness has {len(families)} families"
    _assert_membership(witness)
    return witness


# ---------------------------------------------------------------------------
# Checking
# ---------------------------------------------------------------------------

def check_witness(lp: LinearProgram, witness: DualWitness) -> WitnessCheck:
    """
    Dual feasibility (load <= 1 per client) and the dual objective, with
    right-hand sides taken from `lp`.
    """
    if lp.n_vars != witness.params.n_clients:
        raise WitnessMismatchError(
            f"witness has {witness.params.n_clients} clients, LP has {lp.n_vars}", field="n_clients"
        )
    loads = [Fraction(0)] * lp.n_vars
    objective = Fraction(0)
    for mask in witness.members:
        constraint = lp.find(mask)
        if constraint is None:
            raise WitnessMismatchError(
                f"witness member {mask_to_clients(mask)} is not a constraint of the LP", field="members"
            )
        objective += witness.weight * constraint.rhs
        for c in mask_to_clients(mask):
            loads[c - 1] += witness.weight

    check = WitnessCheck(
        dual_feasible=all(x <= 1 for x in loads),
        tight=all(x == 1 for x in loads),
        objective=objective,
        loads=tuple(loads),
    )
    logger.info(f"Witness {witness.kind.value} objective {objective} (feasible={check.dual_feasible})")
    return check


def to_dump(witness: DualWitness, check: WitnessCheck, closed_total: Optional[Fraction] = None) -> WitnessDump:
    params = witness.params
    return WitnessDump(
        kind=witness.kind,
        n_clients=params.n_clients,
        n_unreliable=params.n_unreliable,
        p_divisor=params.P,
        q=params.Q,
        r=params.R,
        families=[
            WitnessFamily(index=j, members=[mask_to_clients(m) for m in family])
            for j, family in enumerate(witness.families, start=1)
        ],
        membership=witness.membership(),
        dual_feasible=check.dual_feasible,
        tight=check.tight,
        objective=format_fraction(check.objective),
        closed_total=None if closed_total is None else format_fraction(closed_total),
        gap=None if closed_total is None else format_fraction(closed_total - check.objective),
    )
