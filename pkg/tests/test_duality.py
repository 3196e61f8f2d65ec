from fractions import Fraction

import pytest

from src.duality import (
    check_witness,
    construct_witness_general,
    construct_witness_m1,
    to_dump,
    witness_pairs_m1,
)
from src.errors import InputError, WitnessMismatchError
from src.instance import clients_to_mask, generate_random, mask_to_clients
from src.lp_core import Constraint, LinearProgram, build_lp
from src.models import LpFamily, WitnessKind
from src.quantities import derive_params
from src.schedules import closed_form_general_values, closed_form_m1_values


def members_of(witness) -> list[list[list[int]]]:
    return [[mask_to_clients(m) for m in family] for family in witness.families]


def test_general_witness_n4_m1():
    witness = construct_witness_general(derive_params(4, 1))
    assert members_of(witness) == [[[2, 3], [2, 4]], [[1, 3], [1, 4]]]
    assert witness.membership() == [2, 2, 2, 2]


def test_general_witness_n3_m1():
    witness = construct_witness_general(derive_params(3, 1))
    assert members_of(witness) == [[[2], [3]], [[1]]]
    assert witness.membership() == [1, 1, 1]


def test_general_witness_structure_exhaustive():
    for N in range(2, 11):
        for M in range(0, N - 1):
            params = derive_params(N, M)
            witness = construct_witness_general(params)
            sizes = [len(f) for f in witness.families]
            assert sizes == [M + 1] * params.Q + [M - params.R + 1]
            assert witness.membership() == [params.P] * N
            for j, family in enumerate(witness.families, start=1):
                for mask in family:
                    assert j not in mask_to_clients(mask)
                    assert set(range(1, j)) <= set(mask_to_clients(mask))


@pytest.mark.parametrize(
    "N, expected",
    [
        (4, [[(1, 4), (2, 4)], [(1, 3), (2, 3)]]),
        (3, [[(1, 3), (2, 3)], [(1, 2)]]),
        (6, [[(1, 6), (2, 6)], [(3, 5), (1, 5)], [(2, 4), (3, 4)]]),
    ],
)
def test_m1_witness_case_tables(N, expected):
    assert witness_pairs_m1(derive_params(N, 1)) == expected


def test_m1_witness_membership():
    for N in range(3, 11):
        params = derive_params(N, 1)
        witness = construct_witness_m1(params)
        assert len(witness.families) == params.Q + 1
        assert witness.membership() == [params.P] * N
        assert all(len(mask_to_clients(m)) == params.P for m in witness.members)


def test_m1_witness_needs_m1():
    with pytest.raises(InputError):
        construct_witness_m1(derive_params(5, 2))


def test_general_witness_objective_on_hand_instance(inst_c):
    lp, _ = build_lp(inst_c, LpFamily.OVER_GENERAL)
    check = check_witness(lp, construct_witness_general(derive_params(4, 1)))
    assert check.dual_feasible and check.tight
    assert check.objective == 4


def test_m1_witness_objective_on_hand_instance(inst_c):
    lp, _ = build_lp(inst_c, LpFamily.M1_OVER)
    check = check_witness(lp, construct_witness_m1(derive_params(4, 1)))
    assert check.dual_feasible and check.tight
    assert check.objective == 4


def test_zero_rhs_objective():
    params = derive_params(4, 1)
    witness = construct_witness_general(params)
    lp = LinearProgram(4, tuple(Constraint(m, 0) for m in set(witness.members)))
    assert check_witness(lp, witness).objective == 0


def test_missing_member_raises():
    witness = construct_witness_general(derive_params(4, 1))
    lp = LinearProgram(4, (Constraint(clients_to_mask([2, 3]), 1),))
    with pytest.raises(WitnessMismatchError):
        check_witness(lp, witness)


def test_witness_objective_matches_closed_forms():
    for seed in range(20):
        N = 3 + seed % 5
        M = seed % (N - 1)
        inst = generate_random(N, M, 30, 0.5, seed)
        params = derive_params(N, M)

        lp, _ = build_lp(inst, LpFamily.OVER_GENERAL)
        check = check_witness(lp, construct_witness_general(params))
        assert check.tight
        assert check.objective == closed_form_general_values(inst).total

        if M == 1:
            lp1, _ = build_lp(inst, LpFamily.M1_OVER)
            full1, _ = build_lp(inst, LpFamily.M1_FULL)
            witness = construct_witness_m1(params)
            assert check_witness(lp1, witness).objective == closed_form_m1_values(inst).total
            for mask in witness.members:
                assert lp1.find(mask).rhs == full1.find(mask).rhs


def test_dump(inst_c):
    params = derive_params(4, 1)
    witness = construct_witness_m1(params)
    lp, _ = build_lp(inst_c, LpFamily.M1_OVER)
    dump = to_dump(witness, check_witness(lp, witness), closed_total=Fraction(4))
    assert dump.kind is WitnessKind.M1
    assert dump.objective == "4/1"
    assert dump.gap == "0/1"
    assert dump.families[0].members == [[2, 3], [1, 3]]
    assert dump.membership == [2, 2, 2, 2]
