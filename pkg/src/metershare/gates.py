"""Boolean-flavoured circuits over arithmetic sharings.

Everything here reduces to affine combinations plus interactive products
on an Engine, so the cost meter sees exactly the multiplication pattern
a real run would produce.
"""

import random

from .abb import Engine, Handle
from .errors import LengthMismatch

# A shared ID is its bits, most significant first, each bit a handle.
BitSharedId = list


def equals_public(engine: Engine, bits: BitSharedId, public_id: int,
                  width: int) -> Handle:
    """Secret-vs-public equality: sharing of 1 iff the bits spell public_id."""
    return equals_public_batch(engine, [(bits, public_id)], width)[0]


def equals_public_batch(engine: Engine, queries: list[tuple[BitSharedId, int]],
                        width: int) -> list[Handle]:
    """Run many equality tests level-synchronously.

    Per query: XOR each secret bit with the public bit (affine, since one
    operand is public), then OR-fold the differences starting from a zero
    accumulator, exactly width interactive products deep in a tree of
    ceil(log2(width+1)) rounds.  The fold yields 1 on any difference; the
    final negation back to "equal" is affine.
    """
    for bits, public_id in queries:
        if len(bits) != width:
            raise LengthMismatch(f"expected {width} bits, got {len(bits)}")
        if public_id < 0 or public_id >> width:
            raise LengthMismatch(f"{public_id} does not fit {width} bits")

    # affine XOR with the public bit: x + y - 2xy collapses to x or 1-x
    nodes: list[list[Handle]] = []
    zero = engine.constant(0)
    for bits, public_id in queries:
        diffs = [zero]
        for k, bh in enumerate(bits):
            y = public_id >> (width - 1 - k) & 1
            if y:
                diffs.append(engine.lincomb([(-1, bh)], const=1))
            else:
                diffs.append(bh)
        nodes.append(diffs)

    # levelled OR fold: a OR b = a + b - ab, one product per pair
    while any(len(lst) > 1 for lst in nodes):
        pair_at: list[list[int]] = []
        pairs = []
        for qi, lst in enumerate(nodes):
            here = []
            for k in range(0, len(lst) - 1, 2):
                here.append(len(pairs))
                pairs.append((lst[k], lst[k + 1]))
            pair_at.append(here)
        products = engine.product_batch(pairs)
        for qi, lst in enumerate(nodes):
            merged = []
            for slot, k in zip(pair_at[qi], range(0, len(lst) - 1, 2)):
                merged.append(engine.lincomb(
                    [(1, lst[k]), (1, lst[k + 1]), (-1, products[slot])]
                ))
            if len(lst) % 2:
                merged.append(lst[-1])
            nodes[qi] = merged

    return [engine.lincomb([(-1, lst[0])], const=1) for lst in nodes]


def compose_bits(engine: Engine, bits: BitSharedId) -> Handle:
    """Pack shared bits (MSB first) into one shared field element."""
    width = len(bits)
    return engine.lincomb(
        [(1 << (width - 1 - k), bh) for k, bh in enumerate(bits)]
    )


def exchange_gate(engine: Engine, row_a: tuple, row_b: tuple,
                  ctrl: Handle) -> tuple[tuple, tuple]:
    """Swap two tuple rows iff the shared control bit is 1.

    Costs one product per stream: a' = a + c*(b - a), b' = a + b - a'.
    """
    if len(row_a) != len(row_b):
        raise LengthMismatch("rows carry different stream counts")
    deltas = [engine.lincomb([(1, b), (-1, a)]) for a, b in zip(row_a, row_b)]
    moved = engine.product_batch([(ctrl, d) for d in deltas])
    out_a = tuple(
        engine.lincomb([(1, a), (1, m)]) for a, m in zip(row_a, moved)
    )
    out_b = tuple(
        engine.lincomb([(1, a), (1, b), (-1, na)])
        for a, b, na in zip(row_a, row_b, out_a)
    )
    return out_a, out_b


def exchange_layers(m: int) -> list[list[tuple[int, int]]]:
    """Comparator layers of the odd-even merge network, pruned to m wires.

    The construction is for the next power of two; comparators touching a
    wire >= m are dropped, which preserves sortedness on the remaining
    wires (they would only ever push padding maxima downward).  Gates
    within a layer touch disjoint wires and so share a round.
    """
    if m < 2:
        return []
    size = 1 << (m - 1).bit_length()
    layers = []
    p = 1
    while p < size:
        k = p
        while k >= 1:
            layer = []
            for j in range(k % p, size - k, 2 * k):
                for i in range(0, min(k, size - j - k)):
                    if (i + j) // (2 * p) == (i + j + k) // (2 * p):
                        if i + j + k < m:
                            layer.append((i + j, i + j + k))
            if layer:
                layers.append(layer)
            k //= 2
        p *= 2
    return layers


def oblivious_permute(engine: Engine, rows: list[tuple],
                      rng: random.Random | None = None,
                      setup_phase: str | None = None) -> list[tuple]:
    """Permute tuple rows under secret, uniformly random control bits.

    Every comparator of the exchange network becomes an exchange gate
    driven by a fresh shared bit, so no single party learns anything
    about the applied permutation.  Layers are applied in network order;
    control bits are drawn once up front in a single batch.  Bit
    generation opens blinded squares; callers that audit what a phase
    reveals can shunt it into ``setup_phase``.
    """
    width = {len(r) for r in rows}
    if len(width) > 1:
        raise LengthMismatch("rows carry different stream counts")
    layers = exchange_layers(len(rows))
    n_gates = sum(len(layer) for layer in layers)
    if n_gates == 0:
        return list(rows)

    def draw():
        if rng is None:
            return engine.random_bits_batch(n_gates)
        # dedicated randomness source for the permutation
        saved = engine.rng
        engine.rng = rng
        try:
            return engine.random_bits_batch(n_gates)
        finally:
            engine.rng = saved

    if setup_phase is not None:
        with engine.phase(setup_phase):
            bits = draw()
    else:
        bits = draw()
    pc = engine.meter.bucket(engine.current_phase)
    pc.exchange_gates += n_gates
    rows = list(rows)
    used = 0
    streams = len(rows[0])
    for layer in layers:
        ctrls = bits[used:used + len(layer)]
        used += len(layer)
        deltas = []
        for (a, b), c in zip(layer, ctrls):
            for s in range(streams):
                deltas.append((c, engine.lincomb(
                    [(1, rows[b][s]), (-1, rows[a][s])]
                )))
        moved = engine.product_batch(deltas)
        for gi, ((a, b), c) in enumerate(zip(layer, ctrls)):
            ra, rb = rows[a], rows[b]
            na, nb = [], []
            for s in range(streams):
                m = moved[gi * streams + s]
                ha = engine.lincomb([(1, ra[s]), (1, m)])
                na.append(ha)
                nb.append(engine.lincomb([(1, ra[s]), (1, rb[s]), (-1, ha)]))
            rows[a] = tuple(na)
            rows[b] = tuple(nb)
    return rows
