"""Meter-side simulation: scenario configs, readings, encoding, submission.

A scenario fixes the grid shape (regions, suppliers, meters per region)
and the protocol parameters; everything downstream is derived from its
seed, so two runs of the same scenario are byte-identical.  Encoding
happens on the meter, which is the only place plaintext readings exist;
the servers only ever see shares.
"""

from dataclasses import dataclass, field as dfield, asdict
import hashlib
import json
import random

from . import field
from .abb import Engine
from .aggregation import BitwiseTuple, OneHotTuple
from .errors import (
    IdOverflow,
    InsufficientShares,
    ScenarioError,
    UnknownSupplier,
    VectorLengthMismatch,
)
from .shamir import SHARE_BYTES, SharingParams, share_values

ALGORITHMS = ("naa", "ncaa", "niaa")
BYTE_ACCOUNTING = ("paper", "measured")

# Default draw ceilings for synthetic readings, in watt-hours per slot.
DEFAULT_IMP_LEVEL = 5000
DEFAULT_EXP_LEVEL = 3000


def derive_seed(*parts) -> int:
    """Stable 64-bit sub-seed from a path of labels."""
    text = "/".join(str(p) for p in parts)
    return int.from_bytes(
        hashlib.sha256(text.encode()).digest()[:8], "little"
    )


@dataclass
class Scenario:
    n_dno: int
    n_suppliers: int
    sm_per_region: list
    seed: int
    n_servers: int = 3
    threshold: int = 1
    sigma: int = 8
    fault_rate: float = 0.0
    algorithm: str = "naa"
    byte_accounting: str = "measured"
    fail_servers: list = dfield(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.threshold < 1 or self.n_servers < 2 * self.threshold + 1:
            raise ScenarioError(
                f"need n_servers >= 2*threshold+1, got "
                f"{self.n_servers}/{self.threshold}"
            )
        if self.n_dno < 1 or self.n_suppliers < 1:
            raise ScenarioError("need at least one region and one supplier")
        if len(self.sm_per_region) != self.n_dno:
            raise ScenarioError(
                f"sm_per_region lists {len(self.sm_per_region)} regions, "
                f"n_dno says {self.n_dno}"
            )
        if any(m < 0 for m in self.sm_per_region):
            raise ScenarioError("meter counts must be non-negative")
        if self.sigma < 1:
            raise ScenarioError("supplier IDs need at least one bit")
        if self.n_suppliers >= (1 << self.sigma):
            raise ScenarioError(
                f"{self.n_suppliers} suppliers do not fit {self.sigma} bits"
            )
        if not 0.0 <= self.fault_rate <= 1.0:
            raise ScenarioError("fault_rate must be within [0, 1]")
        if self.algorithm not in ALGORITHMS:
            raise ScenarioError(f"unknown algorithm {self.algorithm!r}")
        if self.byte_accounting not in BYTE_ACCOUNTING:
            raise ScenarioError(
                f"unknown byte accounting {self.byte_accounting!r}"
            )
        bad = [s for s in self.fail_servers
               if not 1 <= s <= self.n_servers]
        if bad:
            raise ScenarioError(f"no such servers: {bad}")
        if len(set(self.fail_servers)) > self.n_servers - (self.threshold + 1):
            raise ScenarioError(
                "failing that many servers leaves fewer than t+1 alive"
            )
        # worst-case grid total must stay clear of the field modulus
        total = sum(self.sm_per_region)
        if total * ((1 << field.READING_BITS) - 1) >= field.PRIME:
            raise ScenarioError(
                "total meter population could overflow the field"
            )

    @property
    def params(self) -> SharingParams:
        return SharingParams(self.n_servers, self.threshold)

    @property
    def suppliers(self) -> list[int]:
        return list(range(1, self.n_suppliers + 1))

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ScenarioError(f"unknown scenario keys: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ScenarioError(str(e)) from None

    @classmethod
    def from_file(cls, path) -> "Scenario":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ScenarioError(f"cannot load scenario {path}: {e}") from None
        if not isinstance(data, dict):
            raise ScenarioError("scenario file must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SmartMeter:
    sm_id: int
    region: int
    supplier_imp: int
    supplier_exp: int
    imp_level: int = DEFAULT_IMP_LEVEL
    exp_level: int = DEFAULT_EXP_LEVEL


def build_meters(scenario: Scenario) -> list[SmartMeter]:
    """Deterministic meter population; supplier choice per meter, per flow."""
    meters = []
    sm_id = 0
    for region, count in enumerate(scenario.sm_per_region, start=1):
        for _ in range(count):
            sm_id += 1
            rng = random.Random(derive_seed(scenario.seed, "meter", sm_id))
            meters.append(SmartMeter(
                sm_id=sm_id,
                region=region,
                supplier_imp=rng.randint(1, scenario.n_suppliers),
                supplier_exp=rng.randint(1, scenario.n_suppliers),
            ))
    return meters


def generate_readings(scenario: Scenario, meters: list[SmartMeter],
                      slot: int = 0) -> dict:
    """Per-slot readings, reproducible per (seed, slot, meter)."""
    readings = {}
    for m in meters:
        rng = random.Random(derive_seed(scenario.seed, "reading", slot, m.sm_id))
        readings[m.sm_id] = (
            rng.randint(0, m.imp_level),
            rng.randint(0, m.exp_level),
        )
    return readings


@dataclass
class EncodedTuple:
    """One meter's submission: a list of independent sharings.

    ``secrets[i]`` holds the n share values of the i-th field; the field
    order is fixed by the encoder and known to the servers.
    """

    sm: int
    form: str            # "bitwise" or "onehot"
    secrets: list


def _check_supplier(meter: SmartMeter, supplier: int, scenario: Scenario) -> None:
    if supplier >> scenario.sigma:
        raise IdOverflow(
            f"supplier {supplier} of meter {meter.sm_id} exceeds "
            f"{scenario.sigma} bits"
        )
    if not 1 <= supplier <= scenario.n_suppliers:
        raise UnknownSupplier(
            f"meter {meter.sm_id} references supplier {supplier}"
        )


def encode_bitwise(meter: SmartMeter, imp: int, exp: int, scenario: Scenario,
                   rng: random.Random) -> EncodedTuple:
    """Share the two supplier IDs bit by bit plus the two readings.

    2*sigma + 2 sharings per meter; the bit decomposition is what makes
    the secret equality tests affordable.
    """
    n, t = scenario.n_servers, scenario.threshold
    secrets = []
    for supplier in (meter.supplier_imp, meter.supplier_exp):
        _check_supplier(meter, supplier, scenario)
        for k in range(scenario.sigma - 1, -1, -1):
            secrets.append(share_values(supplier >> k & 1, n, t, rng))
    for reading in (imp, exp):
        secrets.append(share_values(field.encode_reading(reading), n, t, rng))
    return EncodedTuple(sm=meter.sm_id, form="bitwise", secrets=secrets)


def encode_onehot(meter: SmartMeter, imp: int, exp: int, scenario: Scenario,
                  rng: random.Random) -> EncodedTuple:
    """Share one reading-or-zero entry per supplier: 2*N_s sharings."""
    n, t = scenario.n_servers, scenario.threshold
    secrets = []
    for supplier, reading in (
        (meter.supplier_imp, imp), (meter.supplier_exp, exp)
    ):
        _check_supplier(meter, supplier, scenario)
        value = field.encode_reading(reading)
        for u in range(1, scenario.n_suppliers + 1):
            secrets.append(
                share_values(value if u == supplier else 0, n, t, rng)
            )
    return EncodedTuple(sm=meter.sm_id, form="onehot", secrets=secrets)


def encode(meter: SmartMeter, imp: int, exp: int, scenario: Scenario,
           rng: random.Random) -> EncodedTuple:
    if scenario.algorithm == "niaa":
        return encode_onehot(meter, imp, exp, scenario, rng)
    return encode_bitwise(meter, imp, exp, scenario, rng)


@dataclass
class SubmitReport:
    included: list
    excluded: list
    delivered_bundles: int = 0
    dropped_bundles: int = 0
    delivered_shares: int = 0
    four_field_shares: int = 0


def submit(engine: Engine, scenario: Scenario, encoded: list[EncodedTuple],
           fault_rng: random.Random) -> tuple[list, SubmitReport]:
    """Deliver encoded tuples into the region engine, dropping faulty legs.

    A transit fault loses a meter's whole bundle to one server.  Meters
    are only admitted when enough servers hold their shares for the
    chosen algorithm to finish: the equality-test and permutation
    algorithms multiply, so they need a common 2t+1 quorum per meter,
    while pure addition survives on any t+1.  Rejected meters are listed
    in the report and take no part in aggregation or its oracle.
    """
    n, t = scenario.n_servers, scenario.threshold
    dead = set(scenario.fail_servers)
    alive = [s for s in range(1, n + 1) if s not in dead]
    if scenario.algorithm in ("naa", "ncaa") and len(alive) < 2 * t + 1:
        raise InsufficientShares(
            f"{scenario.algorithm} multiplies and needs 2t+1 live servers, "
            f"{len(alive)} remain"
        )
    pc = engine.meter.bucket(engine.current_phase)
    report = SubmitReport(included=[], excluded=[])
    tuples = []
    per_bundle_four = 4 if scenario.algorithm in ("naa", "ncaa") \
        else 2 * scenario.n_suppliers
    for rec in encoded:
        received = [
            s for s in alive
            if not (scenario.fault_rate and fault_rng.random() < scenario.fault_rate)
        ] if scenario.fault_rate else list(alive)
        report.delivered_bundles += len(received)
        report.dropped_bundles += n - len(received)
        report.four_field_shares += per_bundle_four * len(received)
        if scenario.algorithm == "naa":
            # equality circuits only ever mix shares of the same meter,
            # so any 2t+1 live holders form a workable quorum
            ok = len(received) >= 2 * t + 1
        elif scenario.algorithm == "ncaa":
            # the permutation mixes every row with every other, so each
            # admitted row must live on the full set of live servers
            ok = set(received) >= set(alive)
        else:
            ok = len(received) >= t + 1
        if not ok:
            # traffic still happened; the servers just cannot use it
            report.excluded.append(rec.sm)
            delivered = len(received) * len(rec.secrets)
            report.delivered_shares += delivered
            pc.msgs_sm_to_dcc += delivered
            pc.bytes_sm_to_dcc += delivered * SHARE_BYTES
            continue
        report.included.append(rec.sm)
        report.delivered_shares += len(received) * len(rec.secrets)
        keep = set(received)
        handles = [
            engine.input_shares(
                [v if s in keep else None for s, v in
                 zip(range(1, n + 1), values)],
                sender=f"sm{rec.sm}",
            )
            for values in rec.secrets
        ]
        if rec.form == "bitwise":
            sigma = scenario.sigma
            tuples.append(BitwiseTuple(
                sm=rec.sm,
                imp_bits=handles[:sigma],
                exp_bits=handles[sigma:2 * sigma],
                imp_energy=handles[2 * sigma],
                exp_energy=handles[2 * sigma + 1],
            ))
        else:
            ns = scenario.n_suppliers
            tuples.append(OneHotTuple(
                sm=rec.sm,
                imp_vector=handles[:ns],
                exp_vector=handles[ns:],
            ))
    return tuples, report


def plaintext_totals(meters: list[SmartMeter], readings: dict,
                     included: set, n_dno: int, n_suppliers: int) -> dict:
    """Group-by oracle over the plaintext readings of admitted meters."""
    imp = [[0] * n_suppliers for _ in range(n_dno)]
    exp = [[0] * n_suppliers for _ in range(n_dno)]
    for m in meters:
        if m.sm_id not in included:
            continue
        r_imp, r_exp = readings[m.sm_id]
        imp[m.region - 1][m.supplier_imp - 1] += r_imp
        exp[m.region - 1][m.supplier_exp - 1] += r_exp
    return {
        "imp_matrix": imp,
        "exp_matrix": exp,
        "imp_region_totals": [sum(row) for row in imp],
        "exp_region_totals": [sum(row) for row in exp],
        "imp_supplier_totals": [sum(col) for col in zip(*imp)] if imp else [],
        "exp_supplier_totals": [sum(col) for col in zip(*exp)] if exp else [],
        "imp_grid_total": sum(sum(row) for row in imp),
        "exp_grid_total": sum(sum(row) for row in exp),
    }


def audit_tuples(engine: Engine, tuples: list, scenario: Scenario) -> None:
    """Open and sanity-check submitted tuples.  Test harness use only:
    this reveals inputs and must never run inside a protocol phase.
    """
    with engine.phase("audit"):
        for rec in tuples:
            if isinstance(rec, BitwiseTuple):
                for h in rec.imp_bits + rec.exp_bits:
                    if engine.open(h, kind="audit") not in (0, 1):
                        raise IdOverflow(f"meter {rec.sm} sent a non-bit")
            else:
                for vec in (rec.imp_vector, rec.exp_vector):
                    nonzero = sum(
                        1 for h in vec if engine.open(h, kind="audit") != 0
                    )
                    if nonzero > 1:
                        raise VectorLengthMismatch(
                            f"meter {rec.sm} sent more than one active entry"
                        )
