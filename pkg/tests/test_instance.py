import math

import numpy as np
import pytest

from src.errors import InputError
from src.instance import (
    Instance,
    PacketSet,
    clients_to_mask,
    demand_count,
    demand_rhs,
    dumps,
    exclusive_count,
    generate_random,
    holder_counts,
    load,
    loads,
    mask_to_clients,
    missing_set,
    required_set,
    save,
    subsets_of_size,
)


def test_packet_set_algebra():
    a = PacketSet.from_indices([0, 2, 5], 8)
    b = PacketSet.from_indices([2, 3], 8)
    assert (a | b).indices() == [0, 2, 3, 5]
    assert (a & b).indices() == [2]
    assert (a - b).indices() == [0, 5]
    assert len(a.complement()) == 5
    assert 5 in a and 6 not in a
    assert PacketSet.from_indices([2], 8).issubset(a)


def test_packet_set_rejects_out_of_range():
    with pytest.raises(InputError):
        PacketSet.from_indices([8], 8)


def test_mask_helpers():
    assert clients_to_mask([1, 3]) == 0b101
    assert mask_to_clients(0b1010) == [2, 4]
    assert [mask_to_clients(m) for m in subsets_of_size(4, 2, within=0b1011)] == [[1, 2], [1, 4], [2, 4]]


def test_uncovered_packet_is_rejected():
    with pytest.raises(InputError, match="uncovered packet 2"):
        Instance.from_lists([[0], [1]], n_unreliable=0, n_packets=3)


def test_unreliable_must_be_below_clients():
    with pytest.raises(InputError):
        Instance.from_lists([[0], [1]], n_unreliable=2)


def test_required_set_and_demand(inst_b, inst_c):
    assert required_set(inst_b, 1, [2]).indices() == [2]
    assert len(missing_set(inst_c, 1)) == 2
    # packets 1..2 are needed by client 4 when client 3 is down
    assert demand_count(inst_c, [4], [3]) == 2
    assert exclusive_count(inst_c, 1) == 0


def test_required_set_rejects_overlap(inst_b):
    with pytest.raises(InputError):
        required_set(inst_b, 1, [1])


def test_demand_rhs_hand_values(inst_a, inst_b, inst_c):
    assert demand_rhs(inst_a, [1]) == 1
    assert demand_rhs(inst_a, [1, 2]) == 2
    assert demand_rhs(inst_b, [1]) == 1
    assert demand_rhs(inst_c, [1]) == 1
    assert demand_rhs(inst_c, [1, 2]) == 2


def test_holder_counts(inst_c, inst_full):
    assert holder_counts(inst_c).tolist() == [2, 2, 2, 2]
    assert holder_counts(inst_full).tolist() == [4, 4, 4]


def test_permuted(inst_c):
    p = inst_c.permuted([3, 1, 2, 4])
    assert p.holding(1) == inst_c.holding(3)
    assert p.holding(2) == inst_c.holding(1)
    with pytest.raises(InputError):
        inst_c.permuted([1, 1, 2, 3])


def test_generate_random_is_deterministic():
    a = generate_random(5, 1, 64, 0.4, seed=11)
    b = generate_random(5, 1, 64, 0.4, seed=11)
    c = generate_random(5, 1, 64, 0.4, seed=12)
    assert a == b
    assert a != c
    assert len(a.union()) == 64


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2])
def test_generate_random_rejects_alpha(alpha):
    with pytest.raises(InputError):
        generate_random(3, 0, 10, alpha, seed=0)


def test_generate_random_missing_fractions():
    """N=3, alpha=0.5: a fixed pair misses 1/7 of packets, a single client 3/7."""
    K = 20000
    inst = generate_random(3, 0, K, 0.5, seed=5)
    holders = np.zeros((K, 3), dtype=bool)
    for j in range(3):
        holders[inst.holding(j + 1).indices(), j] = True

    pair = np.mean(~holders[:, 0] & ~holders[:, 1])
    single = np.mean(~holders[:, 0])
    for observed, expected in ((pair, 1 / 7), (single, 3 / 7)):
        assert abs(observed - expected) < 4 * math.sqrt(expected * (1 - expected) / K)
    assert (holder_counts(inst) >= 1).all()


def test_json_round_trip(tmp_path, inst_c):
    path = tmp_path / "inst.json"
    save(inst_c, path)
    assert load(path) == inst_c
    assert loads(dumps(inst_c)) == inst_c


def test_loads_reports_field():
    text = '{"version": 1, "n_clients": 2, "n_unreliable": 0, "n_packets": 2, "sets": [[0], [0]]}'
    with pytest.raises(InputError) as e:
        loads(text)
    assert e.value.field == "sets"


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_required_set_within_missing_set(seed):
    inst = generate_random(5, 2, 40, 0.4, seed=seed)
    for i in range(1, 6):
        missing = missing_set(inst, i)
        others = inst.all_clients & ~(1 << (i - 1))
        for size in range(0, 3):
            for unreliable in subsets_of_size(5, size, within=others):
                assert required_set(inst, i, unreliable).issubset(missing)


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_demand_count_shrinks_as_survivors_grow(seed):
    inst = generate_random(5, 1, 60, 0.5, seed=seed)
    for unreliable in subsets_of_size(5, 1):
        pool = inst.all_clients & ~unreliable
        for size in range(1, 4):
            for survivors in subsets_of_size(5, size, within=pool):
                base = demand_count(inst, survivors, unreliable)
                for extra in mask_to_clients(pool & ~survivors):
                    assert demand_count(inst, survivors | 1 << (extra - 1), unreliable) <= base


@pytest.mark.parametrize(("n_clients", "alpha", "seed"), [(3, 0.5, 21), (5, 0.3, 22), (6, 0.7, 23)])
def test_holder_count_histogram(n_clients, alpha, seed):
    K = 10_000
    inst = generate_random(n_clients, 0, K, alpha, seed=seed)
    observed = np.bincount(holder_counts(inst), minlength=n_clients + 1) / K
    assert observed[0] == 0
    norm = 1 - (1 - alpha) ** n_clients
    for h in range(1, n_clients + 1):
        p = math.comb(n_clients, h) * alpha**h * (1 - alpha) ** (n_clients - h) / norm
        assert abs(observed[h] - p) < 4 * math.sqrt(p * (1 - p) / K) + 1e-12
