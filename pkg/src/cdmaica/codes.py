"""Maximal-length sequences and the length-31 Gold family used for spreading."""

from dataclasses import dataclass

import numpy as np

# x^5 + x^2 + 1 and x^5 + x^4 + x^3 + x^2 + 1, a preferred pair of degree 5
PREFERRED_PAIR = ((5, 2), (5, 4, 3, 2))
GOLD_CROSS_VALUES = (-9, -1, 7)


class InvalidPreferredPair(ValueError):
    pass


def _degree(taps):
    taps = tuple(int(t) for t in taps)
    if not taps or min(taps) < 1:
        raise ValueError(f"taps must be positive exponents, got {taps}")
    return max(taps), taps


def m_sequence(taps, init=1):
    """Output of a Fibonacci LFSR as +/-1 chips (bit 0 -> +1, bit 1 -> -1).

    Parameters
    ----------
    taps : sequence of int
        Nonzero exponents of the feedback polynomial, e.g. ``(5, 2)`` for
        ``x^5 + x^2 + 1``. The constant term is implied.
    init : int
        Initial register contents, bit ``i`` holding ``a_i``. Must be nonzero.

    The recurrence is ``a[k+n] = a[k] ^ XOR(a[k+t] for t in taps if t < n)``
    and one full period of ``2**n - 1`` chips is returned.
    """
    n, taps = _degree(taps)
    init = int(init)
    if init == 0:
        raise ValueError("LFSR initial state must be nonzero (all-zero state is a fixed point)")
    if not 0 < init < (1 << n):
        raise ValueError(f"initial state must fit in {n} bits")
    period = (1 << n) - 1
    bits = [(init >> i) & 1 for i in range(n)]
    inner = [t for t in taps if t < n]
    for k in range(period):
        fb = bits[k]
        for t in inner:
            fb ^= bits[k + t]
        bits.append(fb)
    seq = np.array(bits[:period], dtype=np.int8)
    # a maximal sequence returns to its initial state after exactly 2^n - 1 steps
    if bits[period:period + n] != bits[:n] or any(
        bits[j:j + n] == bits[:n] for j in range(1, period)
    ):
        raise ValueError(f"taps {taps} are not a primitive polynomial")
    return 1 - 2 * seq.astype(np.int64)


def periodic_correlation(a, b):
    """Unnormalized periodic cross-correlation ``sum_t a[t] b[t+s]`` for all shifts ``s``."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.array([int(a @ np.roll(b, -s)) for s in range(len(a))])


@dataclass(frozen=True)
class GoldCodeSet:
    """Gold family in +/-1 chip form.

    ``codes`` has shape ``(length + 2, length)``: the two m-sequences
    ``u`` and ``v`` followed by ``u * roll(v, -k)`` for ``k = 0..length-1``
    (chip-wise product is XOR in the bit domain). User ``k`` is assigned
    row ``k``.
    """

    length: int
    codes: np.ndarray
    preferred_pair: tuple

    def __len__(self):
        return self.codes.shape[0]

    def code(self, index):
        if not 0 <= index < len(self):
            raise IndexError(f"code index {index} out of range for family of {len(self)}")
        return self.codes[index].copy()

    def signatures(self, users, first=0):
        """Unit-norm signature matrix ``(length, users)``; column ``k`` is code ``first + k``."""
        if users < 1 or first < 0 or first + users > len(self):
            raise IndexError(f"cannot assign {users} users from code {first} of a family of {len(self)}")
        return self.codes[first:first + users].T / np.sqrt(self.length)


def cross_correlation_values(codes):
    """Set of unnormalized periodic cross-correlation values over all distinct pairs and shifts."""
    c = np.asarray(codes, dtype=np.int64)
    n = c.shape[1]
    values = set()
    iu = np.triu_indices(c.shape[0], 1)
    for s in range(n):
        g = c @ np.roll(c, -s, axis=1).T
        values.update(np.unique(g[iu]).tolist())
        values.update(np.unique(g.T[iu]).tolist())
    return values


def gold_family(preferred_pair=PREFERRED_PAIR, init=1):
    """Build the Gold family from a preferred pair of primitive polynomials.

    Raises
    ------
    InvalidPreferredPair
        If the family's cross-correlation spectrum is not three-valued.
    """
    taps_u, taps_v = preferred_pair
    u = m_sequence(taps_u, init)
    v = m_sequence(taps_v, init)
    if len(u) != len(v):
        raise InvalidPreferredPair("preferred pair polynomials must share a degree")
    n = len(u)
    rows = [u, v] + [u * np.roll(v, -k) for k in range(n)]
    codes = np.array(rows, dtype=np.int64)
    degree = max(taps_u)
    t = 1 + 2 ** ((degree + 2) // 2)
    allowed = {-1, -t, t - 2}
    found = cross_correlation_values(codes)
    if not found <= allowed:
        raise InvalidPreferredPair(
            f"cross-correlation values {sorted(found)} are not within {sorted(allowed)}"
        )
    return GoldCodeSet(n, codes, (tuple(taps_u), tuple(taps_v)))


def format_codes(family):
    """One code per line, chips written as ``+1``/``-1`` separated by spaces."""
    return "".join(
        " ".join("+1" if c > 0 else "-1" for c in row) + "\n" for row in family.codes
    )
