"""Polynomial secret sharing over the fixed prime field.

Shares are evaluations of a random degree-t polynomial at the party
indices 1..n; the secret sits at x = 0.  With n >= 2t+1 the scheme
tolerates n-(t+1) missing shares and any t shares reveal nothing,
which is the honest-majority setting the aggregation engine assumes.
"""

from dataclasses import dataclass
from functools import lru_cache
import random

from . import field
from .errors import (
    DegreeMismatch,
    InconsistentShares,
    InsufficientShares,
    InvalidParams,
    PartyMismatch,
)

PRIME = field.PRIME

# Wire form of one share: party index byte, degree byte, 8-byte value.
SHARE_BYTES = 10


@dataclass(frozen=True)
class SharingParams:
    n: int = 3
    t: int = 1

    def __post_init__(self):
        if self.t < 1:
            raise InvalidParams(f"threshold must be at least 1, got {self.t}")
        if self.n < 2 * self.t + 1:
            raise InvalidParams(
                f"need n >= 2t+1 for multiplication, got n={self.n}, t={self.t}"
            )
        if self.n > 255:
            raise InvalidParams("party indices must fit one byte")


@dataclass(frozen=True)
class Share:
    party: int
    value: int
    degree: int


def poly_eval(coeffs: list[int], x: int) -> int:
    """Evaluate a polynomial given as [a0, a1, ...] at x (Horner)."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % PRIME
    return acc


def share_values(secret: int, n: int, t: int, rng: random.Random,
                 coeffs: list[int] | None = None) -> list[int]:
    """Share values at x = 1..n as a plain list (index i holds party i+1).

    ``coeffs`` overrides the random non-constant coefficients; tests use
    it to force the zero polynomial.
    """
    field.validate(secret)
    if coeffs is None:
        coeffs = [rng.randrange(PRIME) for _ in range(t)]
    elif len(coeffs) != t:
        raise InvalidParams(f"expected {t} coefficients, got {len(coeffs)}")
    poly = [secret] + list(coeffs)
    return [poly_eval(poly, x) for x in range(1, n + 1)]


def share(secret: int, params: SharingParams, rng: random.Random,
          coeffs: list[int] | None = None) -> list[Share]:
    values = share_values(secret, params.n, params.t, rng, coeffs)
    return [Share(i + 1, v, params.t) for i, v in enumerate(values)]


@lru_cache(maxsize=4096)
def lagrange_at(xs: tuple[int, ...], x: int) -> tuple[int, ...]:
    """Lagrange basis coefficients for interpolating at ``x`` from points ``xs``."""
    coeffs = []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if i == j:
                continue
            num = num * (x - xj) % PRIME
            den = den * (xi - xj) % PRIME
        coeffs.append(num * pow(den, -1, PRIME) % PRIME)
    return tuple(coeffs)


def lagrange_at_zero(xs: tuple[int, ...]) -> tuple[int, ...]:
    return lagrange_at(xs, 0)


def interpolate(points: list[tuple[int, int]], x: int = 0) -> int:
    """Value at ``x`` of the unique polynomial through ``points``."""
    xs = tuple(px for px, _ in points)
    lam = lagrange_at(xs, x)
    acc = 0
    for (_, y), c in zip(points, lam):
        acc += y * c
    return acc % PRIME


def _check_share_set(shares: list[Share]) -> int:
    if not shares:
        raise InsufficientShares("no shares given")
    degree = shares[0].degree
    seen = set()
    for s in shares:
        if s.degree != degree:
            raise DegreeMismatch(f"mixed degrees {degree} and {s.degree}")
        if s.party < 1 or s.party in seen:
            raise PartyMismatch(f"bad or duplicate party index {s.party}")
        seen.add(s.party)
    return degree


def reconstruct(shares: list[Share], check_consistency: bool = True) -> int:
    """Recover the secret from at least degree+1 shares.

    With more shares than strictly needed and ``check_consistency`` set,
    the extra points are verified to lie on the interpolated polynomial;
    disagreement raises InconsistentShares.  This detects corruption but
    does not correct it.
    """
    degree = _check_share_set(shares)
    if len(shares) < degree + 1:
        raise InsufficientShares(
            f"degree {degree} needs {degree + 1} shares, got {len(shares)}"
        )
    base = shares[: degree + 1]
    points = [(s.party, s.value) for s in base]
    secret = interpolate(points, 0)
    if check_consistency:
        for extra in shares[degree + 1:]:
            if interpolate(points, extra.party) != extra.value % PRIME:
                raise InconsistentShares(
                    f"share of party {extra.party} is off the polynomial"
                )
    return secret


def add_local(a: list[Share], b: list[Share]) -> list[Share]:
    """Share-wise sum: a sharing of the sum of the two secrets."""
    if len(a) != len(b):
        raise PartyMismatch("share vectors differ in length")
    out = []
    for sa, sb in zip(a, b):
        if sa.party != sb.party:
            raise PartyMismatch(f"parties {sa.party} and {sb.party} do not line up")
        if sa.degree != sb.degree:
            raise DegreeMismatch("cannot add shares of different degree")
        out.append(Share(sa.party, (sa.value + sb.value) % PRIME, sa.degree))
    return out


def add_const(a: list[Share], c: int) -> list[Share]:
    """Add a public constant: shifts the constant coefficient only."""
    return [Share(s.party, (s.value + c) % PRIME, s.degree) for s in a]


def scale_local(a: list[Share], c: int) -> list[Share]:
    """Multiply by a public constant."""
    return [Share(s.party, s.value * c % PRIME, s.degree) for s in a]


def extend_to_secret(known: list[Share], alt_secret: int,
                     params: SharingParams) -> list[Share]:
    """Complete up to t known shares into a full sharing of ``alt_secret``.

    This is the privacy argument made constructive: any t shares are
    consistent with every possible secret, and the completion below
    exhibits the polynomial.  Free party indices are filled with
    arbitrary (zero) values before interpolating.
    """
    field.validate(alt_secret)
    if len(known) > params.t:
        raise InvalidParams(f"at most t={params.t} shares may be fixed")
    _check_share_set(known) if known else None
    points = [(0, alt_secret)] + [(s.party, s.value) for s in known]
    taken = {x for x, _ in points}
    for x in range(1, params.n + 1):
        if len(points) == params.t + 1:
            break
        if x not in taken:
            points.append((x, 0))
    return [
        Share(x, interpolate(points, x), params.t)
        for x in range(1, params.n + 1)
    ]


def serialize_share(s: Share) -> bytes:
    if not 0 < s.party < 256 or not 0 <= s.degree < 256:
        raise PartyMismatch(f"share {s} does not fit the wire format")
    return bytes([s.party, s.degree]) + field.to_bytes(s.value)


def deserialize_share(data: bytes) -> Share:
    if len(data) != SHARE_BYTES:
        raise ValueError(f"expected {SHARE_BYTES} bytes, got {len(data)}")
    return Share(data[0], field.from_bytes(data[2:]), data[1])
