"""
Problem instances: who holds which packets, random generation under the
independent-availability model, and the set algebra the LPs are built from.

Client indices are 1-based at every API boundary and in files; packet
indices are 0-based. Client subsets are passed around internally as int
bit-masks with bit (i - 1) standing for client i.
"""

from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from src import logging
from src.config import MAX_PACKETS
from src.errors import InputError
from src.models import InstanceFile, validate_model

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class PacketSet:
    """Dense bit-vector over packet indices 0..K-1"""

    mask: int
    n_packets: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.n_packets:
            raise InputError(f"PacketSet mask has members outside [0, {self.n_packets})")

    @classmethod
    def from_indices(cls, indices: Iterable[int], n_packets: int) -> "PacketSet":
        mask = 0
        for p in indices:
            if not 0 <= p < n_packets:
                raise InputError(f"packet index {p} out of range [0, {n_packets})", field="sets")
            mask |= 1 << p
        return cls(mask, n_packets)

    @classmethod
    def full(cls, n_packets: int) -> "PacketSet":
        return cls((1 << n_packets) - 1, n_packets)

    @classmethod
    def empty(cls, n_packets: int) -> "PacketSet":
        return cls(0, n_packets)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, packet: int) -> bool:
        return 0 <= packet < self.n_packets and bool(self.mask >> packet & 1)

    def __iter__(self) -> Iterator[int]:
        m = self.mask
        while m:
            low = m & -m
            yield low.bit_length() - 1
            m ^= low

    def __and__(self, other: "PacketSet") -> "PacketSet":
        return PacketSet(self.mask & other.mask, self.n_packets)

    def __or__(self, other: "PacketSet") -> "PacketSet":
        return PacketSet(self.mask | other.mask, self.n_packets)

    def __sub__(self, other: "PacketSet") -> "PacketSet":
        return PacketSet(self.mask & ~other.mask, self.n_packets)

    def complement(self) -> "PacketSet":
        return PacketSet.full(self.n_packets) - self

    def issubset(self, other: "PacketSet") -> bool:
        return self.mask & ~other.mask == 0

    def indices(self) -> list[int]:
        return list(self)


def clients_to_mask(clients: Iterable[int]) -> int:
    """Turn 1-based client indices into a subset mask."""
    mask = 0
    for c in clients:
        mask |= 1 << (c - 1)
    return mask


def mask_to_clients(mask: int) -> list[int]:
    """Sorted 1-based client indices of a subset mask."""
    clients = []
    while mask:
        low = mask & -mask
        clients.append(low.bit_length())
        mask ^= low
    return clients


def subsets_of_size(n: int, size: int, within: int | None = None) -> Iterator[int]:
    """Masks of all size-`size` subsets of [n] (or of the clients in `within`), lexicographic."""
    pool = mask_to_clients(within) if within is not None else range(1, n + 1)
    for combo in combinations(pool, size):
        yield clients_to_mask(combo)


@dataclass(frozen=True)
class Instance:
    """An immutable problem instance"""

    n_clients: int
    n_unreliable: int
    n_packets: int
    sets: tuple[PacketSet, ...]
    alpha: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.n_clients < 1:
            raise InputError("n_clients must be positive", field="n_clients")
        if not 0 <= self.n_unreliable < self.n_clients:
            raise InputError(
                f"n_unreliable must satisfy 0 <= M < N (got M={self.n_unreliable}, N={self.n_clients})",
                field="n_unreliable",
            )
        if not 1 <= self.n_packets <= MAX_PACKETS:
            raise InputError(f"n_packets must lie in [1, {MAX_PACKETS}]", field="n_packets")
        if len(self.sets) != self.n_clients:
            raise InputError(f"expected {self.n_clients} sets, got {len(self.sets)}", field="sets")
        if any(s.n_packets != self.n_packets for s in self.sets):
            raise InputError("every set must range over the same ground set", field="sets")

        uncovered = self.ground - self.union()
        if uncovered.mask:
            raise InputError(f"uncovered packet {next(iter(uncovered))}: held by no client", field="sets")

    @classmethod
    def from_lists(
        cls,
        sets: list[list[int]],
        n_unreliable: int,
        n_packets: int | None = None,
    ) -> "Instance":
        """Build an instance from per-client packet lists (client 1 first)."""
        if n_packets is None:
            n_packets = 1 + max((p for s in sets for p in s), default=-1)
        return cls(
            n_clients=len(sets),
            n_unreliable=n_unreliable,
            n_packets=n_packets,
            sets=tuple(PacketSet.from_indices(s, n_packets) for s in sets),
        )

    @property
    def ground(self) -> PacketSet:
        return PacketSet.full(self.n_packets)

    @property
    def p_divisor(self) -> int:
        return self.n_clients - self.n_unreliable - 1

    @property
    def all_clients(self) -> int:
        return (1 << self.n_clients) - 1

    def holding(self, i: int) -> PacketSet:
        """X_i for 1-based client i."""
        _check_client(self, i)
        return self.sets[i - 1]

    def union(self, clients_mask: int | None = None) -> PacketSet:
        """Union of X_j over the given clients (all clients by default)."""
        if clients_mask is None:
            clients_mask = self.all_clients
        mask = 0
        for c in mask_to_clients(clients_mask):
            mask |= self.sets[c - 1].mask
        return PacketSet(mask, self.n_packets)

    def permuted(self, relabeling: list[int]) -> "Instance":
        """Instance whose new client l is original client relabeling[l - 1]."""
        if sorted(relabeling) != list(range(1, self.n_clients + 1)):
            raise InputError("relabeling must be a permutation of the clients", field="relabeling")
        return Instance(
            n_clients=self.n_clients,
            n_unreliable=self.n_unreliable,
            n_packets=self.n_packets,
            sets=tuple(self.sets[c - 1] for c in relabeling),
            alpha=self.alpha,
            seed=self.seed,
        )


def _check_client(inst: Instance, i: int) -> None:
    if not 1 <= i <= inst.n_clients:
        raise InputError(f"client index {i} out of range [1, {inst.n_clients}]", field="client")


def _check_mask(inst: Instance, mask: int, name: str) -> None:
    if mask < 0 or mask & ~inst.all_clients:
        raise InputError(f"{name} names clients outside [1, {inst.n_clients}]", field=name)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def generate_random(
    n_clients: int,
    n_unreliable: int,
    n_packets: int,
    alpha: float,
    seed: int,
) -> Instance:
    """
    Draw an instance under the random packet distribution.

    Each packet's holder vector is N independent Bernoulli(alpha) draws,
    redrawn for that packet until at least one client holds it.

    Args:
        n_clients: N >= 2
        n_unreliable: M with 0 <= M < N
        n_packets: K >= 1
        alpha: per-client availability probability in (0, 1)
        seed: unsigned 64-bit seed; equal seeds give identical instances

    Returns:
        The generated instance, with alpha and seed recorded as provenance
    """
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}", field="alpha")
    if n_clients < 2:
        raise InputError("n_clients must be at least 2", field="n_clients")
    if not 1 <= n_packets <= MAX_PACKETS:
        raise InputError(f"n_packets must lie in [1, {MAX_PACKETS}]", field="n_packets")
    if not 0 <= n_unreliable < n_clients:
        raise InputError("n_unreliable must satisfy 0 <= M < N", field="n_unreliable")
    if not 0 <= seed < 2**64:
        raise InputError("seed must be an unsigned 64-bit integer", field="seed")

    rng = np.random.default_rng(seed)
    held = rng.random((n_packets, n_clients)) < alpha
    orphans = np.flatnonzero(~held.any(axis=1))
    while orphans.size:
        held[orphans] = rng.random((orphans.size, n_clients)) < alpha
        orphans = orphans[~held[orphans].any(axis=1)]

    sets = tuple(
        PacketSet(int.from_bytes(np.packbits(held[:, j], bitorder="little").tobytes(), "little"), n_packets)
        for j in range(n_clients)
    )
    logger.info(f"Generated instance N={n_clients} M={n_unreliable} K={n_packets} alpha={alpha} seed={seed}")
    return Instance(n_clients, n_unreliable, n_packets, sets, alpha=alpha, seed=seed)


# ---------------------------------------------------------------------------
# Set algebra
# ---------------------------------------------------------------------------

def missing_set(inst: Instance, i: int) -> PacketSet:
    """X \\ X_i."""
    return inst.holding(i).complement()


def required_set(inst: Instance, i: int, unreliable: Iterable[int] | int) -> PacketSet:
    """
    Packets some reliable client other than i holds but i lacks.

    Args:
        inst: the instance
        i: 1-based client, must not be in the unreliable set
        unreliable: the set I, as client indices or a mask

    Returns:
        (union of X_j over j not in I) minus X_i
    """
    unreliable_mask = unreliable if isinstance(unreliable, int) else clients_to_mask(unreliable)
    _check_client(inst, i)
    _check_mask(inst, unreliable_mask, "unreliable")
    if unreliable_mask >> (i - 1) & 1:
        raise InputError(f"client {i} cannot be both reliable and unreliable", field="unreliable")
    return inst.union(inst.all_clients & ~unreliable_mask) - inst.sets[i - 1]


def demand_count(inst: Instance, survivors: Iterable[int] | int, unreliable: Iterable[int] | int) -> int:
    """|intersection over i in survivors of required_set(i, I)|."""
    survivors_mask = survivors if isinstance(survivors, int) else clients_to_mask(survivors)
    unreliable_mask = unreliable if isinstance(unreliable, int) else clients_to_mask(unreliable)
    _check_mask(inst, survivors_mask, "survivors")
    _check_mask(inst, unreliable_mask, "unreliable")
    if not survivors_mask:
        raise InputError("survivors must be nonempty", field="survivors")
    if survivors_mask & unreliable_mask:
        raise InputError("survivors and unreliable set overlap", field="survivors")
    return DemandTable(inst).count(survivors_mask, unreliable_mask)


def exclusive_count(inst: Instance, j: int) -> int:
    """Number of packets held by client j and nobody else."""
    _check_client(inst, j)
    others = inst.union(inst.all_clients & ~(1 << (j - 1)))
    return len(inst.sets[j - 1] - others)


def holder_counts(inst: Instance) -> np.ndarray:
    """Per-packet number of holding clients."""
    counts = np.zeros(inst.n_packets, dtype=np.int64)
    for s in inst.sets:
        counts[s.indices()] += 1
    return counts


class DemandTable:
    """
    Memoized demand counts for one instance.

    The union of reliable holdings depends only on I, and the demand of a
    (survivors, I) pair is the reliable union minus everything any survivor
    holds, so both are cached by mask.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        self._reliable: dict[int, int] = {}
        self._counts: dict[tuple[int, int], int] = {}

    def _reliable_union(self, unreliable_mask: int) -> int:
        union = self._reliable.get(unreliable_mask)
        if union is None:
            union = self.inst.union(self.inst.all_clients & ~unreliable_mask).mask
            self._reliable[unreliable_mask] = union
        return union

    def count(self, survivors_mask: int, unreliable_mask: int) -> int:
        key = (survivors_mask, unreliable_mask)
        cached = self._counts.get(key)
        if cached is None:
            held = self.inst.union(survivors_mask).mask
            cached = (self._reliable_union(unreliable_mask) & ~held).bit_count()
            self._counts[key] = cached
        return cached

    def rhs(self, subset_mask: int) -> int:
        """Robust-recovery right-hand side of the constraint on subset N."""
        inst = self.inst
        outside = inst.all_clients & ~subset_mask
        best = 0
        for unreliable_mask in subsets_of_size(inst.n_clients, inst.n_unreliable, within=outside):
            survivors = outside & ~unreliable_mask
            if survivors:
                best = max(best, self.count(survivors, unreliable_mask))
        return best

    def reduced_rhs(self, subset_mask: int) -> int:
        """max over i outside N of |X̄_{i, comp(N) minus i}|, the reduced-LP right-hand side."""
        outside = self.inst.all_clients & ~subset_mask
        best = 0
        while outside:
            bit = outside & -outside
            best = max(best, self.count(bit, self.inst.all_clients & ~subset_mask & ~bit))
            outside ^= bit
        return best


def demand_rhs(inst: Instance, subset: Iterable[int] | int) -> int:
    """max over I in complement(N), |I| = M, of demand_count(complement(N) \\ I, I)."""
    subset_mask = subset if isinstance(subset, int) else clients_to_mask(subset)
    _check_mask(inst, subset_mask, "subset")
    return DemandTable(inst).rhs(subset_mask)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def to_file(inst: Instance) -> InstanceFile:
    return InstanceFile(
        n_clients=inst.n_clients,
        n_unreliable=inst.n_unreliable,
        n_packets=inst.n_packets,
        alpha=inst.alpha,
        seed=inst.seed,
        sets=[s.indices() for s in inst.sets],
    )


def from_file(data: InstanceFile) -> Instance:
    return Instance(
        n_clients=data.n_clients,
        n_unreliable=data.n_unreliable,
        n_packets=data.n_packets,
        sets=tuple(PacketSet.from_indices(s, data.n_packets) for s in data.sets),
        alpha=data.alpha,
        seed=data.seed,
    )


def loads(text: str) -> Instance:
    return from_file(validate_model(InstanceFile, text))


def dumps(inst: Instance) -> str:
    return to_file(inst).model_dump_json()


def load(path: str | Path) -> Instance:
    """Read and validate an instance file."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"Cannot read instance file {path}: {e}", field="path") from e
    inst = loads(text)
    logger.info(f"Loaded instance from {path}: N={inst.n_clients} M={inst.n_unreliable} K={inst.n_packets}")
    return inst


def save(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps(inst))
    logger.info(f"Saved instance to {path}")
