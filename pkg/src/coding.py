"""
Random linear coded broadcast over GF(2^b).

Each packet is split into P chunks; chunk c of packet p has column index
p * P + c. A client sends r_i * P random combinations of its own chunks.
For every unreliable set I the adversary erases all of I's transmissions,
and each reliable client must recover every chunk some reliable client holds.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Optional

import galois
import numpy as np

from src import logging
from src.config import FIELD_BITS, MAX_RETRIES, get_irreducible_poly
from src.errors import InputError
from src.instance import Instance
from src.models import AdversaryVerdict, ClientVerdict, SimulationReportFile
from src.schedules import Schedule

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def get_field(bits: int) -> type[galois.FieldArray]:
    """GF(2^bits) with the fixed modulus from config."""
    return galois.GF(2**bits, irreducible_poly=get_irreducible_poly(bits))


def field_self_check(bits: int, samples: int = 4096, seed: int = 0) -> bool:
    """
    Check a * a^-1 == 1: exhaustively for GF(2^8), on `samples` random
    nonzero elements for larger fields.
    """
    GF = get_field(bits)
    if bits <= 8:
        elements = GF(np.arange(1, 2**bits))
    else:
        rng = np.random.default_rng(seed)
        elements = GF(rng.integers(1, 2**bits, size=samples))
    return bool(np.all(elements * np.reciprocal(elements) == GF(1)))


@dataclass(frozen=True)
class TransmissionRecord:
    """All coded transmissions of one sender, one coefficient row each"""

    sender: int
    coefficients: galois.FieldArray

    def __post_init__(self):
        if self.coefficients.ndim != 2:
            raise InputError("coefficient block must be two-dimensional", field="coefficients")


def chunk_columns(inst: Instance, client: int) -> np.ndarray:
    """Chunk indices of the packets `client` holds."""
    P = inst.p_divisor
    packets = np.asarray(inst.holding(client).indices(), dtype=np.int64)
    return (packets[:, None] * P + np.arange(P)[None, :]).ravel()


def _check_schedule(inst: Instance, schedule: Schedule) -> None:
    if len(schedule.values) != inst.n_clients:
        raise InputError(
            f"schedule has {len(schedule.values)} entries for {inst.n_clients} clients", field="schedule"
        )
    if schedule.p_divisor != inst.p_divisor:
        raise InputError(
            f"schedule is on the 1/{schedule.p_divisor} grid, instance needs 1/{inst.p_divisor}",
            field="p_divisor",
        )


def generate_transmissions(
    inst: Instance, schedule: Schedule, GF: type[galois.FieldArray], rng: np.random.Generator
) -> list[TransmissionRecord]:
    """Draw r_i * P uniformly random combinations of each client's chunks."""
    width = inst.n_packets * inst.p_divisor
    records = []
    for client, count in enumerate(schedule.counts, start=1):
        columns = chunk_columns(inst, client)
        rows = np.zeros((count, width), dtype=np.int64)
        if count and columns.size:
            rows[:, columns] = rng.integers(0, GF.order, size=(count, columns.size))
        records.append(TransmissionRecord(client, GF(rows)))
    return records


def decode_check(
    inst: Instance, records: list[TransmissionRecord], unreliable: tuple[int, ...], client: int
) -> ClientVerdict:
    """
    Chunks `client` still lacks after hearing every reliable sender.

    Only the columns the client lacks but some reliable client holds are
    unknowns; own chunks are eliminated directly.
    """
    reliable = [c for c in range(1, inst.n_clients + 1) if c not in unreliable]
    target = np.unique(np.concatenate([chunk_columns(inst, c) for c in reliable]))
    unknown = np.setdiff1d(target, chunk_columns(inst, client))
    if unknown.size == 0:
        return ClientVerdict(client=client, success=True, missing_chunks=0)

    blocks = [r.coefficients[:, unknown] for r in records if r.sender in reliable and r.sender != client]
    blocks = [b for b in blocks if b.shape[0]]
    rank = 0
    if blocks:
        GF = type(blocks[0])
        received = GF(np.vstack([b.view(np.ndarray) for b in blocks]))
        rank = int(np.linalg.matrix_rank(received))
    missing = int(unknown.size) - rank
    return ClientVerdict(client=client, success=missing == 0, missing_chunks=missing)


def _run_attempt(
    inst: Instance, schedule: Schedule, GF: type[galois.FieldArray], rng: np.random.Generator
) -> list[AdversaryVerdict]:
    records = generate_transmissions(inst, schedule, GF, rng)
    verdicts = []
    for unreliable in combinations(range(1, inst.n_clients + 1), inst.n_unreliable):
        clients = [
            decode_check(inst, records, unreliable, i) for i in range(1, inst.n_clients + 1) if i not in unreliable
        ]
        verdicts.append(AdversaryVerdict(unreliable=list(unreliable), clients=clients))
    return verdicts


def simulate_with_retries(
    inst: Instance,
    schedule: Schedule,
    field_bits: int = FIELD_BITS,
    max_retries: int = MAX_RETRIES,
    seed: Optional[int] = 0,
) -> SimulationReportFile:
    """
    Simulate the schedule, re-drawing coefficients after a failed attempt.

    Args:
        inst: the instance
        schedule: a grid schedule for inst, in original client labels
        field_bits: 8 or 16
        max_retries: extra attempts after the first; 0 means a single run
        seed: seed of the coefficient stream

    Returns:
        Verdicts of the last attempt; persistent_failure is set when no
        attempt succeeded for every unreliable set
    """
    _check_schedule(inst, schedule)
    if max_retries < 0:
        raise InputError("max_retries must be >= 0", field="max_retries")
    GF = get_field(field_bits)
    seed = 0 if seed is None else seed
    rng = np.random.default_rng(seed)

    attempts = 0
    verdicts: list[AdversaryVerdict] = []
    for attempts in range(1, max_retries + 2):
        verdicts = _run_attempt(inst, schedule, GF, rng)
        failed = [v.unreliable for v in verdicts if not v.success]
        if not failed:
            break
        logger.info(f"Attempt {attempts}: decoding failed for unreliable sets {failed}")

    persistent = not all(v.success for v in verdicts)
    if persistent:
        logger.warning(f"Decoding failed after {attempts} attempt(s) over GF(2^{field_bits})")
    return SimulationReportFile(
        field_bits=field_bits,
        seed=seed,
        attempts=attempts,
        persistent_failure=persistent,
        verdicts=verdicts,
    )


def simulate(
    inst: Instance, schedule: Schedule, field_bits: int = FIELD_BITS, seed: Optional[int] = 0
) -> SimulationReportFile:
    return simulate_with_retries(inst, schedule, field_bits=field_bits, max_retries=0, seed=seed)
