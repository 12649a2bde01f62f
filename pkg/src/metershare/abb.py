"""Simulated arithmetic black box over n lockstep parties.

The engine keeps every party's share of every live secret, so a single
scheduler thread can play all parties of the honest-but-curious protocol
while charging costs exactly as the real message pattern would: each
multiplication is one degree-reduction round of n*(n-1) share messages,
each opening one broadcast round.  Party state is only ever read through
quorum checks, so marking a party failed simply removes it from every
later quorum; failures are permanent for the engine's lifetime (there is
deliberately no un-fail operation).

Batch variants of the interactive operations share one round, which is
what a real implementation would do; per-call variants are conveniences
that wrap a batch of one.  Determinism: all randomness flows from the
seed given at construction, and parties are driven in lockstep by the
calling thread.  A party-per-thread driver would have to reproduce the
same message schedule to stay contract-compatible; this engine does not
provide one.
"""

from contextlib import contextmanager
from dataclasses import dataclass, field as dfield, fields as dfields
import random

from . import field
from .errors import (
    DegreeTooHigh,
    InconsistentShares,
    InsufficientShares,
    TooManyFailures,
)
from .shamir import SHARE_BYTES, SharingParams, lagrange_at, share_values

PRIME = field.PRIME

Handle = int


@dataclass
class PhaseCount:
    """Operation and traffic counters for one labelled protocol phase."""

    multiplications: int = 0
    opens: int = 0
    rounds: int = 0
    random_bits: int = 0
    exchange_gates: int = 0
    msgs_sm_to_dcc: int = 0
    bytes_sm_to_dcc: int = 0
    msgs_between_dcc: int = 0
    bytes_between_dcc: int = 0
    msgs_dcc_to_recipients: int = 0
    bytes_dcc_to_recipients: int = 0

    @property
    def mult_equivalents(self) -> int:
        """Opens cost the same interaction as one multiplication."""
        return self.multiplications + self.opens

    def add(self, other: "PhaseCount") -> None:
        for f in dfields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dfields(self)}
        d["mult_equivalents"] = self.mult_equivalents
        return d


@dataclass
class CostMeter:
    """Monotone counters bucketed by phase label."""

    phases: dict = dfield(default_factory=dict)

    def bucket(self, label: str) -> PhaseCount:
        pc = self.phases.get(label)
        if pc is None:
            pc = self.phases[label] = PhaseCount()
        return pc

    def total(self) -> PhaseCount:
        out = PhaseCount()
        for pc in self.phases.values():
            out.add(pc)
        return out

    def matching(self, prefix: str) -> PhaseCount:
        """Aggregate of all phases whose label starts with ``prefix``."""
        out = PhaseCount()
        for label, pc in self.phases.items():
            if label.startswith(prefix):
                out.add(pc)
        return out

    def merge(self, other: "CostMeter") -> None:
        for label, pc in other.phases.items():
            self.bucket(label).add(pc)

    def as_dict(self) -> dict:
        return {label: pc.as_dict() for label, pc in sorted(self.phases.items())}


class Engine:
    """n simulated parties holding degree-t sharings, with exact cost metering."""

    def __init__(self, params: SharingParams | None = None, seed: int = 0,
                 record_transcript: bool = False):
        self.params = params or SharingParams()
        self.n = self.params.n
        self.t = self.params.t
        self.rng = random.Random(seed)
        self.meter = CostMeter()
        self.opened_log: list[tuple[str, str, int]] = []
        self.transcript: list[tuple] | None = [] if record_transcript else None
        self._phase = "setup"
        self._round = 0
        self._h: dict[int, tuple[list, int]] = {}
        self._next_handle = 1
        self._active = (1 << self.n) - 1
        self.failed: set[int] = set()

    # -- phase bookkeeping ------------------------------------------------

    def set_phase(self, label: str) -> None:
        self._phase = label

    @contextmanager
    def phase(self, label: str):
        old = self._phase
        self._phase = label
        try:
            yield
        finally:
            self._phase = old

    @property
    def current_phase(self) -> str:
        return self._phase

    # -- party liveness ---------------------------------------------------

    def active_parties(self) -> list[int]:
        a = self._active
        return [i + 1 for i in range(self.n) if a >> i & 1]

    def fail_party(self, party: int) -> None:
        """Drop a party from all future quorums.  Permanent."""
        if not 1 <= party <= self.n:
            raise TooManyFailures(f"no such party {party}")
        bit = 1 << (party - 1)
        if not self._active & bit:
            return
        if (self._active.bit_count() - 1) < self.t + 1:
            raise TooManyFailures(
                f"failing party {party} would leave fewer than t+1 alive"
            )
        self._active &= ~bit
        self.failed.add(party)

    # -- handle plumbing --------------------------------------------------

    def _register(self, values: list, mask: int) -> Handle:
        h = self._next_handle
        self._next_handle += 1
        self._h[h] = (values, mask)
        return h

    def live_handles(self) -> list[Handle]:
        return list(self._h.keys())

    def handle_share(self, h: Handle, party: int) -> int | None:
        values, mask = self._h[h]
        if not mask >> (party - 1) & 1:
            return None
        return values[party - 1]

    def handle_mask(self, h: Handle) -> list[int]:
        _, mask = self._h[h]
        return [i + 1 for i in range(self.n) if mask >> i & 1]

    def export_shares(self, h: Handle) -> dict[int, int]:
        """Shares held by live parties, keyed by party index."""
        values, mask = self._h[h]
        mask &= self._active
        return {i + 1: values[i] for i in range(self.n) if mask >> i & 1}

    def _record(self, sender, receiver, handle, nbytes) -> None:
        self.transcript.append((self._round, sender, receiver, handle, nbytes))

    # -- inputs and constants ----------------------------------------------

    def input(self, value: int, sender: str = "dealer") -> Handle:
        """Dealer-side sharing delivered to every party."""
        return self.input_shares(
            share_values(value, self.n, self.t, self.rng), sender
        )

    def input_shares(self, values: list, sender: str = "dealer") -> Handle:
        """Register an externally produced sharing; None marks a lost share."""
        if len(values) != self.n:
            raise InsufficientShares(f"expected {self.n} share slots")
        mask = 0
        for i, v in enumerate(values):
            if v is not None:
                mask |= 1 << i
        if mask.bit_count() < self.t + 1:
            raise InsufficientShares("sharing arrived at fewer than t+1 parties")
        h = self._register(list(values), mask)
        pc = self.meter.bucket(self._phase)
        delivered = mask.bit_count()
        pc.msgs_sm_to_dcc += delivered
        pc.bytes_sm_to_dcc += delivered * SHARE_BYTES
        if self.transcript is not None:
            for i in range(self.n):
                if mask >> i & 1:
                    self._record(sender, f"p{i + 1}", h, SHARE_BYTES)
        return h

    def constant(self, value: int) -> Handle:
        """Public constant as a degree-0 sharing known to everyone."""
        v = value % PRIME
        return self._register([v] * self.n, (1 << self.n) - 1)

    # -- local linear algebra ----------------------------------------------

    def lincomb(self, terms: list[tuple[int, Handle]], const: int = 0) -> Handle:
        """Affine combination of sharings; free of interaction."""
        n = self.n
        mask = (1 << n) - 1
        vals = [const % PRIME] * n
        for coef, h in terms:
            hv, hm = self._h[h]
            mask &= hm
            c = coef % PRIME
            for i in range(n):
                v = hv[i]
                if v is not None:
                    vals[i] = (vals[i] + c * v) % PRIME
        out = [vals[i] if mask >> i & 1 else None for i in range(n)]
        if mask.bit_count() < self.t + 1:
            raise InsufficientShares("combination survives at fewer than t+1 parties")
        return self._register(out, mask)

    def add(self, a: Handle, b: Handle) -> Handle:
        return self.lincomb([(1, a), (1, b)])

    def add_const(self, a: Handle, c: int) -> Handle:
        return self.lincomb([(1, a)], const=c)

    def scale(self, a: Handle, c: int) -> Handle:
        return self.lincomb([(c, a)])

    # -- interactive operations --------------------------------------------

    def product(self, a: Handle, b: Handle) -> Handle:
        return self.product_batch([(a, b)])[0]

    def product_batch(self, pairs: list[tuple[Handle, Handle]]) -> list[Handle]:
        """One round of multiplications with degree reduction.

        Each party multiplies its shares locally (degree 2t), reshares the
        product with a fresh degree-t polynomial, and the recombination
        weights fold the 2t+1-point interpolation back to degree t.
        """
        if not pairs:
            return []
        n, t = self.n, self.t
        if 2 * t + 1 > n:
            raise DegreeTooHigh(f"n={n} parties cannot reduce degree {2 * t}")
        p = PRIME
        quorum_size = 2 * t + 1
        active = self._active
        rng = self.rng
        pc = self.meter.bucket(self._phase)
        self._round += 1
        pc.rounds += 1
        pc.multiplications += len(pairs)
        record = self.transcript is not None

        plan_cache: dict[int, tuple] = {}
        out: list[Handle] = []
        for ha, hb in pairs:
            av, am = self._h[ha]
            bv, bm = self._h[hb]
            q = am & bm & active
            plan = plan_cache.get(q)
            if plan is None:
                if q.bit_count() < quorum_size:
                    raise InsufficientShares(
                        "fewer than 2t+1 parties hold both factors"
                    )
                senders = []
                for i in range(n):
                    if q >> i & 1:
                        senders.append(i)
                        if len(senders) == quorum_size:
                            break
                targets = [i for i in range(n) if active >> i & 1]
                lam = lagrange_at(tuple(i + 1 for i in senders), 0)
                plan = (senders, targets, lam)
                plan_cache[q] = plan
            senders, targets, lam = plan

            new = [None] * n
            for idx, i in enumerate(senders):
                d = av[i] * bv[i] % p
                w = lam[idx]
                if t == 1:
                    c1 = rng.randrange(p)
                    for j in targets:
                        prev = new[j]
                        contrib = w * (d + c1 * (j + 1)) % p
                        new[j] = contrib if prev is None else (prev + contrib) % p
                else:
                    coeffs = [d] + [rng.randrange(p) for _ in range(t)]
                    for j in targets:
                        x = j + 1
                        acc = 0
                        for c in reversed(coeffs):
                            acc = (acc * x + c) % p
                        contrib = w * acc % p
                        prev = new[j]
                        new[j] = contrib if prev is None else (prev + contrib) % p
            mask = 0
            for j in targets:
                mask |= 1 << j
            h = self._register(new, mask)
            out.append(h)
            msgs = len(senders) * (len(targets) - 1)
            pc.msgs_between_dcc += msgs
            pc.bytes_between_dcc += msgs * SHARE_BYTES
            if record:
                for i in senders:
                    for j in targets:
                        if j != i:
                            self._record(f"p{i + 1}", f"p{j + 1}", h, SHARE_BYTES)
        return out

    def open(self, h: Handle, kind: str = "value") -> int:
        return self.open_batch([h], kind)[0]

    def open_batch(self, handles: list[Handle], kind: str = "value") -> list[int]:
        """One broadcast round revealing the given secrets to all parties.

        Every live holder broadcasts its share; reconstruction uses t+1 of
        them and cross-checks the rest, so a corrupted share is detected
        (InconsistentShares) rather than silently absorbed.
        """
        if not handles:
            return []
        n, t = self.n, self.t
        p = PRIME
        active = self._active
        n_active = active.bit_count()
        pc = self.meter.bucket(self._phase)
        self._round += 1
        pc.rounds += 1
        pc.opens += len(handles)
        record = self.transcript is not None

        plan_cache: dict[int, tuple] = {}
        out = []
        for h in handles:
            values, mask = self._h[h]
            present = mask & active
            plan = plan_cache.get(present)
            if plan is None:
                holders = [i for i in range(n) if present >> i & 1]
                if len(holders) < t + 1:
                    raise InsufficientShares(
                        f"opening needs t+1 shares, {len(holders)} present"
                    )
                base = holders[: t + 1]
                base_xs = tuple(i + 1 for i in base)
                lam0 = lagrange_at(base_xs, 0)
                checks = [
                    (i, lagrange_at(base_xs, i + 1)) for i in holders[t + 1:]
                ]
                plan = (holders, base, lam0, checks)
                plan_cache[present] = plan
            holders, base, lam0, checks = plan

            acc = 0
            for idx, i in enumerate(base):
                acc += lam0[idx] * values[i]
            value = acc % p
            for i, lam in checks:
                exp = 0
                for idx, j in enumerate(base):
                    exp += lam[idx] * values[j]
                if exp % p != values[i]:
                    raise InconsistentShares(
                        f"party {i + 1} broadcast a share off the polynomial"
                    )
            msgs = len(holders) * (n_active - 1)
            pc.msgs_between_dcc += msgs
            pc.bytes_between_dcc += msgs * SHARE_BYTES
            if record:
                for i in holders:
                    for j in range(n):
                        if active >> j & 1 and j != i:
                            self._record(f"p{i + 1}", f"p{j + 1}", h, SHARE_BYTES)
            self.opened_log.append((self._phase, kind, value))
            out.append(value)
        return out

    def random_shared_bit(self) -> Handle:
        return self.random_bits_batch(1)[0]

    def random_bits_batch(self, k: int) -> list[Handle]:
        """Uniform secret bits nobody knows: 2 mult-equivalents each.

        Parties jointly hold a random field element, square it, open the
        square, and normalise the element by the public root; the result
        is a sharing of +-1 mapped affinely to {0, 1}.  A zero draw is
        rejected and retried.
        """
        out: list[Handle | None] = [None] * k
        pending = list(range(k))
        p = PRIME
        inv2 = pow(2, -1, p)
        pc = self.meter.bucket(self._phase)
        while pending:
            rs = []
            for _ in pending:
                r = self.rng.randrange(p)
                rs.append(self._register(
                    share_values(r, self.n, self.t, self.rng),
                    self._active,
                ))
            squares = self.product_batch([(h, h) for h in rs])
            opened = self.open_batch(squares, kind="rand")
            retry = []
            for slot, hr, sq in zip(pending, rs, opened):
                if sq == 0:
                    retry.append(slot)
                    continue
                root = field.sqrt(sq)
                coef = pow(2 * root % p, -1, p)
                out[slot] = self.lincomb([(coef, hr)], const=inv2)
                pc.random_bits += 1
            pending = retry
        return out  # type: ignore[return-value]
