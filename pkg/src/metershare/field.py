"""Prime-field arithmetic for the sharing layer.

All values are plain Python integers in ``[0, PRIME)``.  Callers that
construct field elements from untrusted input should pass them through
:func:`validate` once; the arithmetic helpers assume the invariant holds.
Python's arbitrary-precision integers cover the 126-bit intermediates of
a 63-bit modular multiplication, so no special widening is needed.
"""

from .errors import EncodingOverflow, ZeroInverse

# Largest prime below 2**63.  Shares therefore fit in 63 bits on the wire
# while readings (32-bit) summed over a national meter population stay
# clear of the modulus.
PRIME = 9223372036854775783

ELEMENT_BYTES = 8

# Readings are bounded by the meter register width.
READING_BITS = 32

FieldElement = int


def validate(value: int) -> int:
    """Return ``value`` unchanged if it is a canonical field element."""
    if not isinstance(value, int) or value < 0 or value >= PRIME:
        raise ValueError(f"not a canonical field element: {value!r}")
    return value


def add(a: int, b: int) -> int:
    return (a + b) % PRIME


def sub(a: int, b: int) -> int:
    return (a - b) % PRIME


def neg(a: int) -> int:
    return (-a) % PRIME


def mul(a: int, b: int) -> int:
    return (a * b) % PRIME


def inv(a: int) -> int:
    """Multiplicative inverse; zero has none."""
    if a % PRIME == 0:
        raise ZeroInverse("0 has no multiplicative inverse")
    return pow(a, -1, PRIME)


def sqrt(a: int) -> int:
    """A square root of ``a``, which must be a quadratic residue.

    PRIME is congruent to 3 mod 4, so exponentiation by (p+1)/4 gives a
    root directly.  Deterministic: every caller obtains the same root.
    """
    r = pow(a, (PRIME + 1) // 4, PRIME)
    if r * r % PRIME != a % PRIME:
        raise ValueError("not a quadratic residue")
    return r


def encode_reading(raw: int, scale: int = 1) -> int:
    """Embed a meter reading into the field as ``raw * scale``.

    ``raw`` must fit the 32-bit register and the scaled value must stay
    below the modulus, otherwise aggregation could wrap.
    """
    if raw < 0 or raw >> READING_BITS:
        raise EncodingOverflow(f"reading {raw} exceeds {READING_BITS} bits")
    if scale <= 0:
        raise EncodingOverflow(f"scale must be positive, got {scale}")
    value = raw * scale
    if value >= PRIME:
        raise EncodingOverflow(f"{raw} * {scale} does not fit the field")
    return value


def decode_reading(value: int, scale: int = 1) -> int:
    """Invert :func:`encode_reading`; the division must be exact."""
    validate(value)
    if scale <= 0 or value % scale:
        raise ValueError(f"{value} is not a multiple of scale {scale}")
    return value // scale


def to_bytes(value: int) -> bytes:
    """Serialize one element as 8 little-endian bytes."""
    return validate(value).to_bytes(ELEMENT_BYTES, "little")


def from_bytes(data: bytes) -> int:
    if len(data) != ELEMENT_BYTES:
        raise ValueError(f"expected {ELEMENT_BYTES} bytes, got {len(data)}")
    return validate(int.from_bytes(data, "little"))
