"""Command-line entry point: simulations, cost tables, sweeps, self-tests.

``run`` drives the full pipeline for one scenario file: input
distribution, region aggregation under the configured algorithm, grid
aggregation, output distribution, artifact emission.  ``costs`` and
``sweep`` answer analytic questions without running any protocol.
``selftest`` re-derives the core correctness properties from scratch.

All artifacts are deterministic functions of the scenario file: no
timestamps, no machine identifiers, stable key order.  Wall-clock
measurements are printed to the console only.
"""

import argparse
import csv
import io
import json
import math
import os
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import costs, field
from .abb import CostMeter, Engine
from .aggregation import (
    distribute_outputs,
    export_rows,
    grid_aggregate,
    naa_region,
    ncaa_region,
    niaa_region,
)
from .costs import CostParams
from .errors import MeterShareError, ScenarioError
from .gates import equals_public_batch
from .metering import (
    Scenario,
    build_meters,
    derive_seed,
    encode,
    generate_readings,
    plaintext_totals,
    submit,
)
from .shamir import SharingParams, reconstruct, share

SEED_ENV = "METERSHARE_SEED"
HANDLE_SAMPLES_PER_RUN = 100


@dataclass
class RegionOutcome:
    region: int
    shares: object
    meter: CostMeter
    submit_report: object
    opened_log: list
    transcript: list | None
    handle_samples: list
    mult_rows: list


@dataclass
class RunResult:
    scenario: Scenario
    bundles: dict
    matrix: dict
    oracle: dict
    meter: CostMeter
    leaked: dict
    excluded: list
    empty_regions: list
    transcript: list | None
    handle_samples: list
    opened_log: list
    submit_stats: dict
    mult_rows: list
    wall_seconds: float


def _region_meters(meters, region):
    return [m for m in meters if m.region == region]


def _run_region(scenario: Scenario, region: int, meters, readings,
                record_transcript: bool) -> RegionOutcome:
    engine = Engine(
        scenario.params,
        seed=derive_seed(scenario.seed, "engine", region),
        record_transcript=record_transcript,
    )
    for s in scenario.fail_servers:
        engine.fail_party(s)
    engine.set_phase("input_distribution")
    enc_rng = random.Random(derive_seed(scenario.seed, "encode", region))
    fault_rng = random.Random(derive_seed(scenario.seed, "fault", region))
    encoded = [
        encode(m, readings[m.sm_id][0], readings[m.sm_id][1], scenario, enc_rng)
        for m in meters
    ]
    tuples, report = submit(engine, scenario, encoded, fault_rng)

    alg = scenario.algorithm
    if alg == "naa":
        rows = naa_region(engine, tuples, scenario.suppliers,
                          scenario.sigma, region=region)
    elif alg == "ncaa":
        rows = ncaa_region(engine, tuples, scenario.suppliers,
                           scenario.sigma, region=region)
    else:
        rows = niaa_region(engine, tuples, scenario.n_suppliers, region=region)
    shares = export_rows(engine, rows)

    mult_rows = _mult_rows(scenario, engine.meter, region, len(tuples))

    sample_rng = random.Random(derive_seed(scenario.seed, "sample", region))
    live = engine.live_handles()
    picks = sample_rng.sample(live, min(len(live), HANDLE_SAMPLES_PER_RUN))
    samples = [engine.export_shares(h) for h in picks]

    return RegionOutcome(
        region=region,
        shares=shares,
        meter=engine.meter,
        submit_report=report,
        opened_log=list(engine.opened_log),
        transcript=engine.transcript,
        handle_samples=samples,
        mult_rows=mult_rows,
    )


def _mult_rows(scenario: Scenario, meter: CostMeter, region: int,
               included: int) -> list:
    """Per-region measured multiplication counters with analytic references."""
    ns = scenario.n_suppliers
    rows = []
    if scenario.algorithm in ("naa", "niaa"):
        for stream in ("imp", "exp"):
            pc = meter.matching(f"region_aggregation/{region}/{stream}")
            formula = (
                scenario.sigma * included * ns + included * ns
                if scenario.algorithm == "naa" else 0
            )
            rows.append({
                "region": region,
                "stream": stream,
                "included_sms": included,
                "measured_mults": pc.multiplications,
                "formula_mults": formula,
                "opens": pc.opens,
                "rounds": pc.rounds,
            })
        return rows
    # permutation algorithm: control-bit generation is precomputed per
    # stream under its own label; fold it into the stream's cost here
    gates_total = 0
    measured_eq = 0
    opens = 0
    for stream in ("imp", "exp"):
        pc = meter.matching(f"region_aggregation/{region}/{stream}")
        rnd = meter.matching(f"randomness_setup/{region}/{stream}")
        gates_total += pc.exchange_gates
        measured_eq += pc.mult_equivalents + rnd.mult_equivalents
        opens += pc.opens
    m = included
    lg = math.log2(m) if m > 1 else 0.0
    gates_one = gates_total // 2 if gates_total else 0
    rows.append({
        "region": region,
        "included_sms": m,
        "exchange_gates_per_stream": gates_one,
        "measured_mult_equivalents": measured_eq,
        "formula_table": 2 * (m * lg + m),
        "formula_batcher": 2 * (3 * m * lg * lg + m),
        "nominal_three_per_item": 2 * (gates_one * 3 * 2 + m),
        "opens": opens,
    })
    return rows


def run_scenario(scenario: Scenario, record_transcript: bool = False,
                 threads: int = 1) -> RunResult:
    meters = build_meters(scenario)
    readings = generate_readings(scenario, meters, slot=0)
    regions = list(range(1, scenario.n_dno + 1))
    started = time.perf_counter()

    def work(j):
        return _run_region(scenario, j, _region_meters(meters, j),
                           readings, record_transcript)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, regions))
    else:
        outcomes = [work(j) for j in regions]

    meter = CostMeter()
    for o in outcomes:
        meter.merge(o.meter)

    matrix_shares = grid_aggregate([o.shares for o in outcomes],
                                   scenario.n_suppliers)
    dist = distribute_outputs(matrix_shares, scenario.params,
                              failed=frozenset(scenario.fail_servers))
    pc = meter.bucket("output_distribution")
    pc.msgs_dcc_to_recipients += dist.messages
    pc.bytes_dcc_to_recipients += dist.bytes
    wall = time.perf_counter() - started

    included = set()
    excluded = []
    submit_stats = {
        "delivered_bundles": 0, "dropped_bundles": 0,
        "delivered_shares": 0, "four_field_shares": 0,
    }
    for o in outcomes:
        included.update(o.submit_report.included)
        excluded.extend(o.submit_report.excluded)
        submit_stats["delivered_bundles"] += o.submit_report.delivered_bundles
        submit_stats["dropped_bundles"] += o.submit_report.dropped_bundles
        submit_stats["delivered_shares"] += o.submit_report.delivered_shares
        submit_stats["four_field_shares"] += o.submit_report.four_field_shares

    oracle = plaintext_totals(meters, readings, included,
                              scenario.n_dno, scenario.n_suppliers)
    tso = dist.bundles["tso"]
    matrix = {k: tso[k] for k in oracle}

    leaked = {
        str(o.region): o.shares.leaked_counts
        for o in outcomes if o.shares.leaked_counts is not None
    }

    transcript = None
    if record_transcript:
        transcript = []
        offset = 0
        for o in outcomes:
            top = 0
            for rnd, snd, rcv, h, nb in o.transcript:
                top = max(top, rnd)
                transcript.append(
                    (rnd + offset, snd, rcv, f"r{o.region}.h{h}", nb)
                )
            offset += top
        for snd, rcv, label, nb in dist.records:
            transcript.append((offset + 1, snd, rcv, label, nb))

    samples = []
    for o in outcomes:
        samples.extend(o.handle_samples)
    sample_rng = random.Random(derive_seed(scenario.seed, "sample", "grid"))
    if len(samples) > HANDLE_SAMPLES_PER_RUN:
        samples = sample_rng.sample(samples, HANDLE_SAMPLES_PER_RUN)

    opened = []
    for o in outcomes:
        opened.extend(o.opened_log)

    mult_rows = []
    for o in outcomes:
        mult_rows.extend(o.mult_rows)

    return RunResult(
        scenario=scenario,
        bundles=dist.bundles,
        matrix=matrix,
        oracle=oracle,
        meter=meter,
        leaked=leaked,
        excluded=sorted(excluded),
        empty_regions=matrix_shares.empty_regions,
        transcript=transcript,
        handle_samples=samples,
        opened_log=opened,
        submit_stats=submit_stats,
        mult_rows=mult_rows,
        wall_seconds=wall,
    )


def check_result(run: RunResult) -> list[str]:
    """Compare every opened output against the plaintext oracle."""
    problems = []
    for key, want in run.oracle.items():
        got = run.matrix.get(key)
        if got != want:
            problems.append(f"{key}: protocol {got!r} != oracle {want!r}")
    o = run.oracle
    for j in range(run.scenario.n_dno):
        b = run.bundles[f"dno:{j + 1}"]
        if b["imp_by_supplier"] != o["imp_matrix"][j] \
                or b["exp_by_supplier"] != o["exp_matrix"][j] \
                or b["imp_total"] != o["imp_region_totals"][j] \
                or b["exp_total"] != o["exp_region_totals"][j]:
            problems.append(f"dno:{j + 1} bundle mismatch")
    for k in range(run.scenario.n_suppliers):
        b = run.bundles[f"supplier:{k + 1}"]
        col_imp = [o["imp_matrix"][j][k] for j in range(run.scenario.n_dno)]
        col_exp = [o["exp_matrix"][j][k] for j in range(run.scenario.n_dno)]
        if b["imp_by_region"] != col_imp or b["exp_by_region"] != col_exp \
                or b["imp_total"] != o["imp_supplier_totals"][k] \
                or b["exp_total"] != o["exp_supplier_totals"][k]:
            problems.append(f"supplier:{k + 1} bundle mismatch")
    return problems


def build_report(run: RunResult, threads: int = 1) -> dict:
    """Assemble the cost report: formula vs measured per traffic segment."""
    sc = run.scenario
    total = run.meter.total()
    alg = sc.algorithm

    def scenario_formula(segment):
        if segment == "dcc_to_recipients":
            # recipient traffic does not scale with meter counts
            p = CostParams(n_dno=sc.n_dno, n_suppliers=sc.n_suppliers,
                           sigma=sc.sigma, sm_per_region=1)
            return costs.formula_comm(alg, segment, p)
        acc = 0
        for m_j in sc.sm_per_region:
            if m_j == 0:
                continue
            p = CostParams(n_dno=1, n_suppliers=sc.n_suppliers,
                           sigma=sc.sigma, sm_per_region=m_j)
            acc += costs.formula_comm(alg, segment, p)
        return acc

    seg_measured = {
        "sms_to_dcc": (total.msgs_sm_to_dcc, total.bytes_sm_to_dcc),
        "between_dcc": (total.msgs_between_dcc, total.bytes_between_dcc),
        "dcc_to_recipients": (
            total.msgs_dcc_to_recipients, total.bytes_dcc_to_recipients
        ),
    }
    share_bits = CostParams().share_bits
    segments = {}
    for seg, (msgs, nbytes) in seg_measured.items():
        nominal = msgs * share_bits
        if seg == "sms_to_dcc" and alg in ("naa", "ncaa"):
            nominal_formula_fields = run.submit_stats["four_field_shares"] * share_bits
        else:
            nominal_formula_fields = nominal
        segments[seg] = {
            "formula_bits": scenario_formula(seg),
            "measured_messages": msgs,
            "measured_bits": nbytes * 8,
            "nominal_bits_63": nominal,
            "nominal_bits_63_formula_fields": nominal_formula_fields,
            "headline_bits": (
                nominal_formula_fields if sc.byte_accounting == "paper"
                else nbytes * 8
            ),
        }

    mult_total = total.multiplications
    mults = {
        "per_region": run.mult_rows,
        "measured_total": mult_total,
        "opens_total": total.opens,
        "mult_equivalents_total": total.mult_equivalents,
        "rounds_total": total.rounds,
        "random_bits_total": total.random_bits,
        "exchange_gates_total": total.exchange_gates,
    }

    formula_region_mults = sum(
        costs.formula_mults(alg, CostParams(
            n_dno=1, n_suppliers=sc.n_suppliers, sigma=sc.sigma,
            sm_per_region=max(m_j, 1),
        )) if m_j > 0 else 0
        for m_j in sc.sm_per_region
    )
    cpu_params = CostParams(threads=max(threads, 1))
    report = {
        "metadata": {
            "prime": field.PRIME,
            "share_bits": share_bits,
            "share_bytes": 10,
            "byte_accounting": sc.byte_accounting,
            "network": "batcher_odd_even_merge",
            "algorithm": alg,
            "n_servers": sc.n_servers,
            "threshold": sc.threshold,
            "n_dno": sc.n_dno,
            "n_suppliers": sc.n_suppliers,
            "sigma": sc.sigma,
            "sm_per_region": list(sc.sm_per_region),
            "seed": sc.seed,
            "fault_rate": sc.fault_rate,
            "fail_servers": list(sc.fail_servers),
        },
        "segments": segments,
        "multiplications": mults,
        "cpu": {
            "per_mult_seconds": cpu_params.per_mult_seconds,
            "threads": cpu_params.threads,
            "projected_seconds_formula": costs.extrapolate_cpu(
                formula_region_mults * 2, cpu_params
            ),
            "projected_seconds_measured": costs.extrapolate_cpu(
                total.mult_equivalents, cpu_params
            ),
        },
        "faults": {
            "excluded_sms": run.excluded,
            "delivered_bundles": run.submit_stats["delivered_bundles"],
            "dropped_bundles": run.submit_stats["dropped_bundles"],
            "fail_servers": list(sc.fail_servers),
            "empty_regions": run.empty_regions,
        },
        "leakage": run.leaked,
    }
    report["compare"] = costs.compare(report)
    return report


# -- artifact writers -------------------------------------------------------

def write_matrix_csv(run: RunResult, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["region", "supplier", "imp", "exp"])
        for j in range(run.scenario.n_dno):
            for k in range(run.scenario.n_suppliers):
                w.writerow([
                    j + 1, k + 1,
                    run.matrix["imp_matrix"][j][k],
                    run.matrix["exp_matrix"][j][k],
                ])


def write_bundles_json(run: RunResult, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(run.bundles, fh, indent=2, sort_keys=True)
        fh.write("\n")


def report_rows(report: dict) -> list[dict]:
    """Flatten a report into the analytic-table row shape."""
    md = report["metadata"]
    base = {
        "n_dno": md["n_dno"],
        "n_suppliers": md["n_suppliers"],
        "sigma": md["sigma"],
        "sm_per_region": "/".join(str(m) for m in md["sm_per_region"]),
        "threads": report["cpu"]["threads"],
    }
    rows = []
    for seg, data in report["segments"].items():
        rows.append({
            "protocol": md["algorithm"],
            "segment": seg,
            **base,
            "formula_bits": data["formula_bits"],
            "measured_bits": data["headline_bits"],
            "formula_mults": None,
            "measured_mult_equivalents": None,
            "cpu_seconds": None,
        })
    rows.append({
        "protocol": md["algorithm"],
        "segment": "region_multiplications",
        **base,
        "formula_bits": None,
        "measured_bits": None,
        "formula_mults": sum(
            r.get("formula_mults", 0) or 0 for r in
            report["multiplications"]["per_region"]
        ) or None,
        "measured_mult_equivalents":
            report["multiplications"]["mult_equivalents_total"],
        "cpu_seconds": report["cpu"]["projected_seconds_measured"],
    })
    return rows


CSV_COLUMNS = [
    "protocol", "segment", "n_dno", "n_suppliers", "sigma", "sm_per_region",
    "threads", "formula_bits", "measured_bits", "formula_mults",
    "measured_mult_equivalents", "cpu_seconds",
]


def write_rows_csv(rows: list[dict], path_or_buf) -> None:
    own = isinstance(path_or_buf, str)
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else row.get(k))
                        for k in CSV_COLUMNS})
    finally:
        if own:
            fh.close()


def write_report(report: dict, out_dir: str, fmt: str) -> None:
    if fmt == "json":
        with open(os.path.join(out_dir, "cost_report.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        write_rows_csv(report_rows(report),
                       os.path.join(out_dir, "cost_report.csv"))


def write_transcript(run: RunResult, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("round,sender,receiver,handle,bytes\n")
        for rnd, snd, rcv, h, nb in run.transcript:
            fh.write(f"{rnd},{snd},{rcv},{h},{nb}\n")


# -- subcommands -------------------------------------------------------------

def cmd_run(args) -> int:
    try:
        scenario = Scenario.from_file(args.scenario)
        env_seed = os.environ.get(SEED_ENV)
        if env_seed is not None:
            data = scenario.to_dict()
            data["seed"] = int(env_seed)
            scenario = Scenario.from_dict(data)
    except (ScenarioError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    try:
        run = run_scenario(scenario, record_transcript=bool(args.out),
                           threads=args.threads)
    except MeterShareError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    report = build_report(run, threads=args.threads)
    mult_eq = run.meter.total().mult_equivalents
    if mult_eq:
        per_mult = run.wall_seconds / mult_eq
        print(f"measured {mult_eq} mult-equivalents in "
              f"{run.wall_seconds:.3f} s ({per_mult * 1e6:.1f} us each, "
              f"informational)")
    else:
        print(f"no interactive operations; wall {run.wall_seconds:.3f} s")

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_matrix_csv(run, os.path.join(args.out, "aggregates.csv"))
        write_bundles_json(run, os.path.join(args.out, "bundles.json"))
        write_report(report, args.out, args.format)
        write_transcript(run, os.path.join(args.out, "transcript.log"))

    if args.check:
        problems = check_result(run)
        if problems:
            for p in problems:
                print(f"MISMATCH {p}", file=sys.stderr)
            return 2
        print(f"check ok: all outputs match the plaintext oracle "
              f"({len(run.excluded)} meters excluded by faults)")
    return 0


def _cost_params(args) -> CostParams:
    return CostParams(
        n_dno=args.n_dno,
        n_suppliers=args.n_suppliers,
        sigma=args.sigma,
        sm_per_region=args.sm,
        per_mult_seconds=args.per_mult_seconds,
        threads=args.threads,
    )


def parse_sweep(spec: str) -> list[int]:
    """Parse 'sm=START:STOP:STEP' with K/M suffixes into meter counts."""
    def num(text):
        text = text.strip().lower()
        mult = 1
        if text.endswith("m"):
            mult, text = 1_000_000, text[:-1]
        elif text.endswith("k"):
            mult, text = 1_000, text[:-1]
        return int(float(text) * mult)

    if "=" in spec:
        name, _, rng = spec.partition("=")
        if name.strip() != "sm":
            raise ValueError(f"only the sm parameter can be swept, got {name!r}")
    else:
        rng = spec
    parts = rng.split(":")
    if len(parts) != 3:
        raise ValueError("sweep spec must be sm=START:STOP:STEP")
    start, stop, step = (num(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError("sweep range must increase")
    values = []
    v = start
    while v <= stop:
        values.append(v)
        v += step
    return values


def cmd_costs(args) -> int:
    try:
        params = _cost_params(args)
        table = costs.build_table(params, trusted_tso=args.trusted_tso)
        sweep = costs.sweep_series(params, parse_sweep(args.sweep)) \
            if args.sweep else None
    except (ValueError, MeterShareError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        if args.format == "json":
            with open(os.path.join(args.out, "cost_table.json"), "w") as fh:
                json.dump(table, fh, indent=2, sort_keys=True)
                fh.write("\n")
        else:
            write_rows_csv(table, os.path.join(args.out, "cost_table.csv"))
        if sweep:
            for name, rows in sweep.items():
                path = os.path.join(args.out, f"sweep_{name}.csv")
                with open(path, "w", newline="") as fh:
                    w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
                    w.writeheader()
                    w.writerows(rows)
    else:
        buf = io.StringIO()
        write_rows_csv(table, buf)
        print(buf.getvalue(), end="")
        if sweep:
            for name, rows in sweep.items():
                print(f"# sweep {name}")
                w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0].keys()))
                w.writeheader()
                w.writerows(rows)
    return 0


def cmd_sweep(args) -> int:
    args.sweep = args.spec
    return cmd_costs(args)


# -- selftest ----------------------------------------------------------------

def selftest_shamir(trials: int = 400) -> str | None:
    rng = random.Random(20_08)
    for _ in range(trials):
        n = rng.choice([3, 5, 7])
        t = rng.randint(1, (n - 1) // 2)
        params = SharingParams(n, t)
        secret = rng.randrange(field.PRIME)
        shares = share(secret, params, rng)
        picked = rng.sample(shares, t + 1)
        if reconstruct(picked) != secret:
            return f"reconstruction failed for n={n}, t={t}"
    return None


def selftest_equality(width: int = 8, pairs=None) -> str | None:
    space = 1 << width
    if pairs is None:
        pairs = ((x, y) for x in range(space) for y in range(space))
    for x, y in pairs:
        engine = Engine(SharingParams(3, 1), seed=(x << width) | y)
        bits = [engine.input(x >> (width - 1 - k) & 1)
                for k in range(width)]
        with engine.phase("equality"):
            out = equals_public_batch(engine, [(bits, y)], width)[0]
            got = engine.open(out)
        pc = engine.meter.bucket("equality")
        if got != (1 if x == y else 0):
            return f"equals({x}, {y}) opened to {got}"
        if pc.multiplications != width:
            return f"equals({x}, {y}) used {pc.multiplications} mults"
        if pc.rounds > width.bit_length() + 1:
            return f"equals({x}, {y}) took {pc.rounds} rounds"
    return None


def selftest_equivalence(seed: int = 424242) -> str | None:
    for alg in ("naa", "ncaa", "niaa"):
        scenario = Scenario(
            n_dno=2, n_suppliers=4, sm_per_region=[12, 9],
            seed=seed, sigma=6, algorithm=alg,
        )
        run = run_scenario(scenario)
        problems = check_result(run)
        if problems:
            return f"{alg}: {problems[0]}"
    return None


def cmd_selftest(_args) -> int:
    stages = [
        ("shamir_roundtrip", selftest_shamir),
        ("equality_exhaustive", selftest_equality),
        ("aggregation_equivalence", selftest_equivalence),
    ]
    failures = 0
    for name, fn in stages:
        started = time.perf_counter()
        try:
            problem = fn()
        except Exception as e:  # a broken build may raise anywhere
            problem = f"{type(e).__name__}: {e}"
        elapsed = time.perf_counter() - started
        if problem is None:
            print(f"PASS {name} ({elapsed:.1f}s)")
        else:
            failures += 1
            print(f"FAIL {name}: {problem}")
    return 2 if failures else 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metershare",
        description="secret-sharing smart-metering aggregation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario file")
    p_run.add_argument("--scenario", required=True, help="scenario JSON path")
    p_run.add_argument("--check", action="store_true",
                       help="compare outputs against the plaintext oracle")
    p_run.add_argument("--out", default=None, help="artifact directory")
    p_run.add_argument("--format", choices=("csv", "json"), default="json",
                       help="cost report format")
    p_run.add_argument("--threads", type=int, default=1,
                       help="regions processed in parallel")
    p_run.set_defaults(func=cmd_run)

    def add_cost_flags(p):
        p.add_argument("--n-dno", type=int, default=14)
        p.add_argument("--n-suppliers", type=int, default=10)
        p.add_argument("--sigma", type=int, default=8)
        p.add_argument("--sm", type=int, default=2_200_000,
                       help="meters per region")
        p.add_argument("--per-mult-seconds", type=float, default=20.8e-6)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--trusted-tso", action="store_true",
                       help="recipient traffic via the grid operator only")
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p_costs = sub.add_parser("costs", help="print the analytic cost table")
    add_cost_flags(p_costs)
    p_costs.add_argument("--sweep", default=None,
                         help="also emit series, e.g. sm=0.5M:4M:0.5M")
    p_costs.set_defaults(func=cmd_costs)

    p_sweep = sub.add_parser("sweep", help="emit curve series over meter counts")
    add_cost_flags(p_sweep)
    p_sweep.add_argument("spec", help="range spec, e.g. sm=0.5M:4M:0.5M")
    p_sweep.set_defaults(func=cmd_sweep)

    p_self = sub.add_parser("selftest", help="run built-in correctness checks")
    p_self.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    code = args.func(args)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
