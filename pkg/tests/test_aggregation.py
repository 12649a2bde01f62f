"""Region algorithms against the plaintext group-by oracle."""

import random

import pytest

from metershare import field
from metershare.abb import Engine
from metershare.aggregation import (
    BitwiseTuple,
    distribute_outputs,
    export_rows,
    grid_aggregate,
    merge_cells,
    naa_region,
    ncaa_region,
    niaa_region,
    reconstruct_cell,
)
from metershare.errors import (
    InsufficientShares,
    OpenedIdInvalid,
    VectorLengthMismatch,
)
from metershare.metering import (
    Scenario,
    build_meters,
    encode,
    generate_readings,
    plaintext_totals,
    submit,
)
from metershare.shamir import SharingParams


def small_scenario(alg, seed=31, m=(11, 7)):
    return Scenario(
        n_dno=len(m), n_suppliers=4, sm_per_region=list(m),
        seed=seed, sigma=5, algorithm=alg,
    )


def run_regions(scenario):
    """Direct pipeline: encode, submit, aggregate, export; per region."""
    meters = build_meters(scenario)
    readings = generate_readings(scenario, meters)
    outs = []
    for region in range(1, scenario.n_dno + 1):
        engine = Engine(scenario.params, seed=1000 + region)
        engine.set_phase("input_distribution")
        rng = random.Random(region)
        enc = [
            encode(m, readings[m.sm_id][0], readings[m.sm_id][1], scenario, rng)
            for m in meters if m.region == region
        ]
        tuples, report = submit(engine, scenario, enc, rng)
        if scenario.algorithm == "naa":
            rows = naa_region(engine, tuples, scenario.suppliers,
                              scenario.sigma, region=region)
        elif scenario.algorithm == "ncaa":
            rows = ncaa_region(engine, tuples, scenario.suppliers,
                               scenario.sigma, region=region)
        else:
            rows = niaa_region(engine, tuples, scenario.n_suppliers,
                               region=region)
        outs.append((engine, export_rows(engine, rows)))
    oracle = plaintext_totals(meters, readings,
                              {m.sm_id for m in meters},
                              scenario.n_dno, scenario.n_suppliers)
    return outs, oracle


def opened_matrix(shares_list, scenario):
    t = scenario.threshold
    imp = [[reconstruct_cell(c, t) for c in r.imp] for _, r in shares_list]
    exp = [[reconstruct_cell(c, t) for c in r.exp] for _, r in shares_list]
    return imp, exp


@pytest.mark.parametrize("alg", ["naa", "ncaa", "niaa"])
def test_region_algorithms_match_oracle(alg):
    scenario = small_scenario(alg)
    outs, oracle = run_regions(scenario)
    imp, exp = opened_matrix(outs, scenario)
    assert imp == oracle["imp_matrix"]
    assert exp == oracle["exp_matrix"]


def test_naa_multiplication_count_is_exact():
    scenario = small_scenario("naa")
    outs, _ = run_regions(scenario)
    for region, (engine, _) in enumerate(outs, start=1):
        m = scenario.sm_per_region[region - 1]
        for stream in ("imp", "exp"):
            pc = engine.meter.bucket(f"region_aggregation/{region}/{stream}")
            assert pc.multiplications == \
                scenario.sigma * m * scenario.n_suppliers + m * scenario.n_suppliers
            assert pc.opens == 0


def test_naa_skips_interaction_for_empty_region():
    scenario = small_scenario("naa")
    engine = Engine(scenario.params, seed=0)
    rows = naa_region(engine, [], scenario.suppliers, scenario.sigma)
    assert rows.empty
    assert engine.meter.total().multiplications == 0


def test_ncaa_leak_is_membership_multiset():
    scenario = small_scenario("ncaa", seed=57)
    meters = build_meters(scenario)
    outs, _ = run_regions(scenario)
    for region, (_, shares) in enumerate(outs, start=1):
        mine = [m for m in meters if m.region == region]
        for stream, attr in (("imp", "supplier_imp"), ("exp", "supplier_exp")):
            true_counts = {u: 0 for u in scenario.suppliers}
            for m in mine:
                true_counts[getattr(m, attr)] += 1
            assert shares.leaked_counts[stream] == true_counts


def test_ncaa_region_opens_only_supplier_ids():
    scenario = small_scenario("ncaa", seed=58)
    outs, _ = run_regions(scenario)
    registry = set(scenario.suppliers)
    for engine, _ in outs:
        assert engine.opened_log, "permutation must open the routed IDs"
        for phase, kind, value in engine.opened_log:
            if phase.startswith("region_aggregation/"):
                assert kind == "supplier_id"
                assert value in registry
            else:
                # control-bit generation opens blinded squares only
                assert phase.startswith("randomness_setup/")
                assert kind == "rand"


def test_ncaa_rejects_unregistered_id():
    engine = Engine(SharingParams(3, 1), seed=2)
    sigma, suppliers = 4, [1, 2, 3]
    engine.set_phase("input_distribution")

    def mk(supplier):
        bits = [engine.input(supplier >> (sigma - 1 - k) & 1)
                for k in range(sigma)]
        return BitwiseTuple(sm=1, imp_bits=bits, exp_bits=bits,
                            imp_energy=engine.input(9),
                            exp_energy=engine.input(9))

    tuples = [mk(2), mk(7)]  # 7 is nobody
    with pytest.raises(OpenedIdInvalid):
        ncaa_region(engine, tuples, suppliers, sigma)


def test_niaa_is_non_interactive():
    scenario = small_scenario("niaa")
    outs, _ = run_regions(scenario)
    for engine, _ in outs:
        pc = engine.meter.matching("region_aggregation")
        assert pc.multiplications == 0
        assert pc.msgs_between_dcc == 0
        assert pc.opens == 0
        assert engine.opened_log == []


def test_niaa_rejects_wrong_vector_length():
    scenario = small_scenario("niaa")
    outs, _ = run_regions(scenario)
    engine = outs[0][0]
    from metershare.aggregation import OneHotTuple
    bad = OneHotTuple(sm=1, imp_vector=[engine.input(0)] * 3,
                      exp_vector=[engine.input(0)] * 3)
    with pytest.raises(VectorLengthMismatch):
        niaa_region(engine, [bad], scenario.n_suppliers)


def test_composite_cell_merges_heterogeneous_masks():
    p = field.PRIME
    rng = random.Random(8)
    params = SharingParams(5, 1)
    engine = Engine(params, seed=8)
    a = engine.input(100)
    b = engine.input(200)
    cell_a = {tuple(range(1, 6)): engine.export_shares(a)}
    # b's share only reached servers 1..3
    shares_b = {s: v for s, v in engine.export_shares(b).items() if s <= 3}
    cell_b = {(1, 2, 3): shares_b}
    acc = {}
    merge_cells(acc, cell_a)
    merge_cells(acc, cell_b)
    assert len(acc) == 2
    assert reconstruct_cell(acc, 1) == 300
    # losing server 1 keeps both groups above t+1
    assert reconstruct_cell(acc, 1, frozenset({1})) == 300
    # losing 2 and 3 starves the second group; this must never pass silently
    with pytest.raises(InsufficientShares):
        reconstruct_cell(acc, 1, frozenset({2, 3}))
    del rng, p


def test_grid_and_distribution_match_oracle():
    scenario = small_scenario("naa", seed=77)
    outs, oracle = run_regions(scenario)
    matrix = grid_aggregate([s for _, s in outs], scenario.n_suppliers)
    dist = distribute_outputs(matrix, scenario.params)
    tso = dist.bundles["tso"]
    for key in oracle:
        assert tso[key] == oracle[key]
    for j in range(scenario.n_dno):
        b = dist.bundles[f"dno:{j + 1}"]
        assert b["imp_by_supplier"] == oracle["imp_matrix"][j]
        assert b["imp_total"] == oracle["imp_region_totals"][j]
    for k in range(scenario.n_suppliers):
        b = dist.bundles[f"supplier:{k + 1}"]
        assert b["exp_by_region"] == [
            oracle["exp_matrix"][j][k] for j in range(scenario.n_dno)
        ]
        assert b["exp_total"] == oracle["exp_supplier_totals"][k]


def test_distribution_message_count():
    scenario = small_scenario("naa", seed=78)
    outs, _ = run_regions(scenario)
    matrix = grid_aggregate([s for _, s in outs], scenario.n_suppliers)
    dist = distribute_outputs(matrix, scenario.params)
    nd, ns, n = scenario.n_dno, scenario.n_suppliers, scenario.n_servers
    # every cell crosses the wire three times: matrix row, column, and
    # grid view; each crossing is one share from each live server
    cells = nd * ns * 2
    assert dist.messages == cells * 3 * n
    assert dist.bytes == dist.messages * 10
    assert len(dist.records) == dist.messages


def test_distribution_with_failed_server_unchanged():
    scenario = small_scenario("ncaa", seed=79)
    outs, oracle = run_regions(scenario)
    matrix = grid_aggregate([s for _, s in outs], scenario.n_suppliers)
    clean = distribute_outputs(matrix, scenario.params)
    for lost in (1, 2, 3):
        degraded = distribute_outputs(matrix, scenario.params,
                                      failed=frozenset({lost}))
        assert degraded.bundles == clean.bundles
        assert degraded.messages < clean.messages
    with pytest.raises(InsufficientShares):
        distribute_outputs(matrix, scenario.params, failed=frozenset({1, 2}))


def test_empty_region_contributes_zero_row():
    scenario = Scenario(n_dno=2, n_suppliers=3, sm_per_region=[5, 0],
                        seed=3, sigma=4, algorithm="naa")
    outs, oracle = run_regions(scenario)
    matrix = grid_aggregate([s for _, s in outs], scenario.n_suppliers)
    assert matrix.empty_regions == [2]
    dist = distribute_outputs(matrix, scenario.params)
    assert dist.bundles["dno:2"]["imp_by_supplier"] == [0, 0, 0]
    assert dist.bundles["tso"]["imp_matrix"] == oracle["imp_matrix"]
