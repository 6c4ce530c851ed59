"""
Maximal-length sequences and cyclic S-matrices
Generates LFSR sequences from binary primitive polynomials and exposes the
rows of the cyclic S-matrix they seed, without materializing the N x N matrix.

Register convention: Fibonacci register with stages s[0..n-1]; each step emits
s[0], computes the feedback as the XOR of s[0] and every stage s[t] for the
polynomial's middle exponents t, and shifts toward the output with the
feedback entering s[n-1].
"""
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
import logging
import numpy as np
from scipy import fft

from services.errors import (
    BadFactorization, IndexOutOfRange, InvalidParameter, NonPrimitive,
    UnsupportedDegree, ZeroSeed,
)

logger = logging.getLogger(__name__)

MIN_DEGREE = 2
MAX_DEGREE = 20
DENSE_LIMIT = 4095

# Published primitive polynomials for degrees 9-20 (exponents of the nonzero terms).
# Degrees below 9 are found by search; every entry is checked by the period test.
_PUBLISHED_TAPS = {
    9: (9, 4, 0),
    10: (10, 3, 0),
    11: (11, 2, 0),
    12: (12, 7, 4, 3, 0),
    13: (13, 4, 3, 1, 0),
    14: (14, 12, 11, 1, 0),
    15: (15, 1, 0),
    16: (16, 5, 3, 2, 0),
    17: (17, 3, 0),
    18: (18, 7, 0),
    19: (19, 6, 5, 1, 0),
    20: (20, 3, 0),
}


@dataclass(frozen=True)
class PrimitivePolynomial:
    """Binary polynomial given by the exponents of its nonzero terms"""

    degree: int
    taps: frozenset

    def __post_init__(self):
        _check_degree(self.degree)
        taps = frozenset(int(t) for t in self.taps)
        if self.degree not in taps or 0 not in taps:
            raise InvalidParameter(f'taps {sorted(taps)} must contain {self.degree} and 0')
        if any(t < 0 or t > self.degree for t in taps):
            raise InvalidParameter(f'taps {sorted(taps)} exceed degree {self.degree}')
        object.__setattr__(self, 'taps', taps)

    @property
    def period(self):
        return (1 << self.degree) - 1

    @property
    def feedback_mask(self):
        """Integer mask of the register stages XORed into the feedback"""
        mask = 1
        for t in self.taps:
            if 0 < t < self.degree:
                mask |= 1 << t
        return mask

    def __str__(self):
        terms = []
        for t in sorted(self.taps, reverse=True):
            terms.append('1' if t == 0 else 'x' if t == 1 else f'x^{t}')
        return ' + '.join(terms)


@dataclass(frozen=True, eq=False)
class MlsSequence:
    """Binary maximal-length sequence of period 2^degree - 1"""

    bits: np.ndarray
    degree: int

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size != (1 << self.degree) - 1:
            raise InvalidParameter(
                f'degree {self.degree} sequence needs {(1 << self.degree) - 1} bits, got {bits.size}')
        bits.setflags(write=False)
        object.__setattr__(self, 'bits', bits)

    @property
    def length(self):
        return self.bits.size

    def bipolar(self):
        return 1.0 - 2.0 * self.bits.astype(np.float64)


@dataclass(frozen=True, eq=False)
class CyclicSMatrix:
    """
    Cyclic S-matrix described by its first row and the p x q tiling

    Row j (1-based) is the first row rotated left by j - 1 and is displayed
    as a p x q pattern under the row-major vectorization.
    """

    first_row: MlsSequence
    p: int
    q: int

    def __post_init__(self):
        if self.p < 1 or self.q < 1 or self.p * self.q != self.first_row.length:
            raise BadFactorization(
                f'{self.p} x {self.q} does not factor N = {self.first_row.length}')

    @property
    def n(self):
        return self.first_row.length

    @property
    def degree(self):
        return self.first_row.degree


def _check_degree(degree):
    if not MIN_DEGREE <= int(degree) <= MAX_DEGREE:
        raise UnsupportedDegree(
            f'degree {degree} outside supported range [{MIN_DEGREE}, {MAX_DEGREE}]')


def _seed_to_int(seed, degree):
    seed = np.asarray(seed, dtype=np.uint8).reshape(-1)
    if seed.size != degree:
        raise InvalidParameter(f'seed needs {degree} stages, got {seed.size}')
    if not seed.any():
        raise ZeroSeed('LFSR seed must contain at least one 1')
    value = 0
    for stage, bit in enumerate(seed):
        value |= int(bit & 1) << stage
    return value


def canonical_seed(degree):
    """Single 1 in the last stage"""
    _check_degree(degree)
    seed = np.zeros(degree, dtype=np.uint8)
    seed[-1] = 1
    return seed


def sequence_period(poly, seed=None):
    """
    Number of register steps until the state returns to the seed

    Args:
        poly (PrimitivePolynomial): feedback polynomial
        seed: register stages; canonical seed when omitted

    Returns:
        int: cycle length through the seed state
    """
    degree = poly.degree
    start = _seed_to_int(canonical_seed(degree) if seed is None else seed, degree)
    mask, top = poly.feedback_mask, degree - 1
    state, steps = start, 0
    limit = 1 << degree
    while True:
        state = (state >> 1) | (((state & mask).bit_count() & 1) << top)
        steps += 1
        if state == start or steps > limit:
            return steps


def lfsr_sequence(poly, seed=None):
    """
    Run the register for one full period

    Args:
        poly (PrimitivePolynomial): feedback polynomial of degree n
        seed: n register stages, not all zero; canonical seed when omitted

    Returns:
        MlsSequence: the 2^n - 1 output bits
    """
    degree = poly.degree
    _check_degree(degree)
    start = _seed_to_int(canonical_seed(degree) if seed is None else seed, degree)
    period = poly.period
    mask, top = poly.feedback_mask, degree - 1

    out = bytearray(period)
    state = start
    last = period - 1
    for i in range(period):
        out[i] = state & 1
        state = (state >> 1) | (((state & mask).bit_count() & 1) << top)
        if state == start and i < last:
            raise NonPrimitive(f'{poly} repeats after {i + 1} steps, expected {period}')
    return MlsSequence(np.frombuffer(bytes(out), dtype=np.uint8), degree)


def _candidates(degree):
    middle = range(1, degree)
    for count in (1, 3, 5):
        for chosen in combinations(middle, count):
            yield PrimitivePolynomial(degree, frozenset((degree, 0) + chosen))


@lru_cache(maxsize=None)
def primitive_polynomial(degree):
    """
    Primitive polynomial of the given degree, verified by the period test

    Args:
        degree (int): 2..20

    Returns:
        PrimitivePolynomial
    """
    _check_degree(degree)
    if degree in _PUBLISHED_TAPS:
        poly = PrimitivePolynomial(degree, frozenset(_PUBLISHED_TAPS[degree]))
        if sequence_period(poly) == poly.period:
            return poly
        logger.warning('⚠ Tabulated polynomial %s failed the period test, searching', poly)

    for poly in _candidates(degree):
        if sequence_period(poly) == poly.period:
            logger.debug('Found primitive polynomial %s', poly)
            return poly
    raise NonPrimitive(f'no primitive polynomial found for degree {degree}')


def polynomial_table():
    """Primitive polynomials for every supported degree, each period-tested"""
    return [primitive_polynomial(d) for d in range(MIN_DEGREE, MAX_DEGREE + 1)]


def default_geometry(degree):
    """Most nearly square p x q factorization of 2^degree - 1 with p <= q"""
    n = (1 << degree) - 1
    p = int(np.sqrt(n))
    while n % p:
        p -= 1
    return p, n // p


def fitting_geometry(height, width):
    """
    Smallest pattern field that holds a height x width image

    Returns:
        tuple[int, int, int]: degree, p, q with p >= height and q >= width
    """
    for degree in range(MIN_DEGREE, MAX_DEGREE + 1):
        n = (1 << degree) - 1
        for p in range(height, n // max(width, 1) + 1):
            if n % p == 0:
                return degree, p, n // p
    raise UnsupportedDegree(f'no supported field holds a {height}x{width} image')


def smatrix(degree, p=None, q=None):
    """Cyclic S-matrix from the table polynomial and the canonical seed"""
    if p is None or q is None:
        p, q = default_geometry(degree)
    first_row = lfsr_sequence(primitive_polynomial(degree))
    return CyclicSMatrix(first_row, int(p), int(q))


def smatrix_row(m, j):
    """Row j (1-based) of the implied matrix: first row rotated left by j - 1"""
    if not 1 <= j <= m.n:
        raise IndexOutOfRange(f'pattern index {j} outside 1..{m.n}')
    return np.roll(m.first_row.bits, -(j - 1))


def tile_pattern(m, j):
    """Pattern j laid out on the p x q field, pattern[r, c] = row_j[r * q + c]"""
    if m.p * m.q != m.n:
        raise BadFactorization(f'{m.p} x {m.q} does not factor N = {m.n}')
    return smatrix_row(m, j).reshape(m.p, m.q)


def dense_matrix(m):
    """Explicit N x N S-matrix, for small N only"""
    if m.n > DENSE_LIMIT:
        raise InvalidParameter(f'dense matrix refused for N = {m.n} > {DENSE_LIMIT}')
    idx = np.arange(m.n)
    return m.first_row.bits[(idx[:, None] + idx[None, :]) % m.n].astype(np.float64)


def dense_inverse(m):
    """Closed-form inverse (2 / (N + 1)) (2 S^T - J)"""
    s = dense_matrix(m)
    return (2.0 / (m.n + 1)) * (2.0 * s.T - 1.0)


def autocorrelation(seq):
    """Circular autocorrelation of the +/-1 mapped sequence at every lag"""
    b = seq.bipolar()
    spectrum = fft.fft(b)
    return np.rint(fft.ifft(spectrum * np.conj(spectrum)).real).astype(np.int64)
