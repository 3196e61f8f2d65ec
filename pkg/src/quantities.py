"""
Instance statistics the closed forms are written in: the (P, Q, R) split,
k_j, k_{i,j}, lambda_{m,n}, and the two client re-labelings.
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import TypeVar

import numpy as np

from src import logging
from src.errors import DegenerateInstanceError, InputError
from src.instance import (
    DemandTable,
    Instance,
    clients_to_mask,
    exclusive_count,
    missing_set,
    required_set,
)

logger = logging.getLogger(__name__)

_T = TypeVar("_T")


@dataclass(frozen=True)
class DerivedParams:
    """P chunks per packet and the split N = (M+1)(Q+1) - R"""

    n_clients: int
    n_unreliable: int
    P: int
    Q: int
    R: int

    @property
    def boundary(self) -> int:
        """N - Q, the index where the M=1 closed form switches branches."""
        return self.n_clients - self.Q


def derive_params(n_clients: int, n_unreliable: int) -> DerivedParams:
    """
    Compute P = N - M - 1 and the unique Q >= 1, 0 <= R <= M with
    N = (M+1)(Q+1) - R.
    """
    if n_clients < n_unreliable + 2:
        raise DegenerateInstanceError(
            f"degenerate instance: N={n_clients} < M+2={n_unreliable + 2}", field="n_clients"
        )
    group = n_unreliable + 1
    q = -(-n_clients // group) - 1
    r = group * (q + 1) - n_clients
    assert q >= 1 and 0 <= r <= n_unreliable, f"no valid (Q, R) for N={n_clients}, M={n_unreliable}"
    return DerivedParams(n_clients, n_unreliable, P=n_clients - n_unreliable - 1, Q=q, R=r)


@dataclass(frozen=True)
class Relabeling:
    """order[l - 1] is the original index of the client carrying new label l"""

    order: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.order) != list(range(1, len(self.order) + 1)):
            raise InputError(f"relabeling {list(self.order)} is not a permutation", field="relabeling")

    @classmethod
    def identity(cls, n: int) -> "Relabeling":
        return cls(tuple(range(1, n + 1)))

    @property
    def is_identity(self) -> bool:
        return self.order == tuple(range(1, len(self.order) + 1))

    def original(self, label: int) -> int:
        return self.order[label - 1]

    def to_original(self, values: list[_T]) -> list[_T]:
        """Re-index per-client values from new labels to original indices."""
        out = list(values)
        for label, orig in enumerate(self.order, start=1):
            out[orig - 1] = values[label - 1]
        return out

    def to_relabeled(self, values: list[_T]) -> list[_T]:
        """Re-index per-client values from original indices to new labels."""
        return [values[orig - 1] for orig in self.order]


class PairTable:
    """
    All k_{i,j} of one instance, 1-based.

    Uses k_{i,j} = |X̄_i| - e_j: a packet i lacks is needed under I = {j}
    unless only j holds it.
    """

    def __init__(self, inst: Instance):
        self.n_clients = inst.n_clients
        self.missing = [len(missing_set(inst, i)) for i in range(1, inst.n_clients + 1)]
        self.exclusive = [exclusive_count(inst, j) for j in range(1, inst.n_clients + 1)]

    def __getitem__(self, pair: tuple[int, int]) -> int:
        i, j = pair
        if i == j:
            raise InputError(f"k_{{i,j}} needs i != j (got {i})", field="pair")
        return self.missing[i - 1] - self.exclusive[j - 1]

    def weight(self, i: int) -> int:
        """Sort key |X̄_i| + e_i of the M=1 relabeling."""
        return self.missing[i - 1] + self.exclusive[i - 1]


def k_pair(inst: Instance, i: int, j: int) -> int:
    """k_{i,j} = |X̄_{i,{j}}| by direct evaluation."""
    if i == j:
        raise InputError(f"k_pair needs i != j (got {i})", field="pair")
    return len(required_set(inst, i, [j]))


def k_matrix(inst: Instance) -> np.ndarray:
    """All k_{i,j} as an N x N array (0-based), diagonal set to 0."""
    pairs = PairTable(inst)
    matrix = np.subtract.outer(np.asarray(pairs.missing), np.asarray(pairs.exclusive))
    np.fill_diagonal(matrix, 0)
    return matrix


def _family_value(
    table: DemandTable, n_clients: int, size: int, forced: list[int], excluded: int
) -> int | None:
    """
    max |X̄_{i, comp(N) minus i}| over size-`size` subsets N that contain
    `forced` and avoid `excluded`; None when no subset qualifies.
    """
    forced_mask = clients_to_mask(forced)
    pool = [c for c in range(1, n_clients + 1) if c != excluded and c not in forced]
    free = size - len(forced)
    if free < 0 or free > len(pool):
        return None
    best = None
    for combo in combinations(pool, free):
        value = table.reduced_rhs(forced_mask | clients_to_mask(combo))
        if best is None or value > best:
            best = value
    return best


def k_family(inst: Instance, params: DerivedParams) -> list[int]:
    """
    k_1 .. k_{N-M} on the instance's current labels.

    k_j maximizes over size-P subsets N with {1..j-1} in N and j not in N,
    and over i outside N, the demand of i when the rest of comp(N) is
    unreliable.
    """
    table = DemandTable(inst)
    ks = []
    for j in range(1, inst.n_clients - inst.n_unreliable + 1):
        value = _family_value(table, inst.n_clients, params.P, list(range(1, j)), excluded=j)
        assert value is not None, f"empty subset family for k_{j}"
        ks.append(value)
    return ks


def relabel_general(inst: Instance) -> Relabeling:
    """
    Greedy labeling that makes k_1 >= k_2 >= ... >= k_{N-M}.

    Label j goes to the unlabeled client whose exclusion (with labels
    1..j-1 forced into N) gives the largest k value; ties go to the
    smallest original index. Remaining clients keep their original order.
    """
    params = derive_params(inst.n_clients, inst.n_unreliable)
    table = DemandTable(inst)
    fixed: list[int] = []
    remaining = list(range(1, inst.n_clients + 1))

    for _ in range(inst.n_clients - inst.n_unreliable):
        best_client, best_value = None, None
        for c in remaining:
            value = _family_value(table, inst.n_clients, params.P, fixed, excluded=c)
            if value is not None and (best_value is None or value > best_value):
                best_client, best_value = c, value
        assert best_client is not None, f"no admissible client for label {len(fixed) + 1}"
        fixed.append(best_client)
        remaining.remove(best_client)

    relabeling = Relabeling(tuple(fixed + remaining))
    ks = k_family(inst.permuted(list(relabeling.order)), params)
    assert all(a >= b for a, b in zip(ks, ks[1:])), f"relabel_general left k unsorted: {ks}"
    logger.debug(f"General relabeling {list(relabeling.order)} with k={ks}")
    return relabeling


def relabel_m1(inst: Instance) -> Relabeling:
    """
    Order clients so that k_{i,j} >= k_{j,i} for every i < j (M = 1).

    Since k_{i,j} - k_{j,i} = w_i - w_j with w_i = |X̄_i| + e_i, a stable
    descending sort on w gives the full pairwise order.
    """
    if inst.n_unreliable != 1:
        raise InputError(f"relabel_m1 needs M = 1 (got M={inst.n_unreliable})", field="n_unreliable")
    pairs = PairTable(inst)
    order = sorted(range(1, inst.n_clients + 1), key=lambda i: -pairs.weight(i))
    relabeling = Relabeling(tuple(order))

    violations = check_pairwise_order(inst.permuted(order))
    assert not violations, f"relabel_m1 left pairs out of order: {violations}"
    return relabeling


def adjacent_swap_pass(inst: Instance) -> Relabeling:
    """
    One left-to-right pass swapping neighbours n, n+1 when k_{n,n+1} < k_{n+1,n}.

    Kept for comparison with relabel_m1: a single pass does not reach the
    full pairwise order in general (weights (2, 1, 3) end as (2, 3, 1)).
    """
    pairs = PairTable(inst)
    order = list(range(1, inst.n_clients + 1))
    for n in range(inst.n_clients - 1):
        a, b = order[n], order[n + 1]
        if pairs[a, b] < pairs[b, a]:
            order[n], order[n + 1] = b, a
    return Relabeling(tuple(order))


def check_pairwise_order(inst: Instance) -> list[tuple[int, int]]:
    """Pairs i < j with k_{i,j} < k_{j,i} on the current labels."""
    pairs = PairTable(inst)
    n = inst.n_clients
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1) if pairs[i, j] < pairs[j, i]]


class LambdaTable:
    """lambda_{m,n} of an M=1 instance already ordered by relabel_m1"""

    def __init__(self, inst: Instance, params: DerivedParams):
        if inst.n_unreliable != 1:
            raise InputError("lambda values are defined for M = 1 only", field="n_unreliable")
        self.n_clients = inst.n_clients
        self.params = params
        self.k = PairTable(inst)

    @cached_property
    def _anchors(self) -> tuple[int, int, int]:
        n, b = self.n_clients, self.params.boundary
        return self.k[1, n], self.k[1, b], self.k[b, n]

    def _first(self, m: int, n: int) -> int:
        k, last = self.k, self.n_clients
        k1n, k1b, kbn = self._anchors
        return k[m, last] - k1n + k1b - kbn + k[n, last]

    def _second(self, m: int, n: int) -> int:
        k1n, _, _ = self._anchors
        return self.k[m, self.n_clients] - k1n + self.k[1, n]

    def __getitem__(self, pair: tuple[int, int]) -> int:
        m, n = pair
        if not 1 <= m < n <= self.n_clients:
            raise InputError(f"lambda_{{m,n}} needs 1 <= m < n <= N (got {m}, {n})", field="pair")
        b = self.params.boundary

        if n <= b:
            value = self._first(m, n)
            if n == b:
                assert value == self._second(m, n), f"lambda branches disagree at n=N-Q for m={m}"
            return value
        if m <= b:
            return self._second(m, n)
        k1n, k1b, kbn = self._anchors
        return self.k[1, m] - k1n + kbn - k1b + self.k[1, n]


def lambda_pair(inst: Instance, params: DerivedParams, m: int, n: int) -> int:
    """lambda_{m,n} on an instance already ordered by relabel_m1."""
    return LambdaTable(inst, params)[m, n]
