"""GF(2^n) arithmetic and the companion binary matrices Gamma_n, M_n^(j), M_n.

Elements are ints in little-endian bit order: bit i is the coefficient of 2^i.
"""
from dataclasses import dataclass
from functools import lru_cache

from .config import MAX_FIELD_DEGREE
from .errors import DegreeOutOfRangeError
from .f2linalg import BinaryMatrix

GfElement = int


def _check_degree(n: int) -> None:
    if not 1 <= n <= MAX_FIELD_DEGREE:
        raise DegreeOutOfRangeError(f"field degree {n} outside 1..{MAX_FIELD_DEGREE}")


def clmul(a: int, b: int) -> int:
    """Carry-less product of two bit polynomials."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, modulus: int) -> int:
    degree = modulus.bit_length() - 1
    while a.bit_length() - 1 >= degree:
        a ^= modulus << (a.bit_length() - 1 - degree)
    return a


def is_irreducible(bits: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2."""
    degree = bits.bit_length() - 1
    if degree < 1:
        return False
    for d in range(1, degree // 2 + 1):
        for divisor in range(1 << d, 1 << (d + 1)):
            if poly_mod(bits, divisor) == 0:
                return False
    return True


@dataclass(frozen=True)
class IrreduciblePoly:
    """Monic irreducible polynomial P_n, encoded with bit n as the leading term."""

    n: int
    bits: int

    def __post_init__(self):
        if self.bits >> self.n != 1:
            raise ValueError(f"polynomial {bin(self.bits)} is not monic of degree {self.n}")
        if not self.bits & 1:
            raise ValueError(f"polynomial {bin(self.bits)} has no constant term")

    @property
    def tail(self) -> int:
        """Coefficients below the leading term; equals 2^n mod P_n."""
        return self.bits ^ (1 << self.n)


@lru_cache(maxsize=None)
def find_irreducible(n: int) -> IrreduciblePoly:
    """Smallest irreducible monic degree-n polynomial, as an integer encoding."""
    _check_degree(n)
    for bits in range((1 << n) | 1, 1 << (n + 1), 2):
        if is_irreducible(bits):
            return IrreduciblePoly(n, bits)
    raise DegreeOutOfRangeError(f"no irreducible polynomial of degree {n}")


def gf_mul(a: GfElement, b: GfElement, p: IrreduciblePoly) -> GfElement:
    limit = 1 << p.n
    if not (0 <= a < limit and 0 <= b < limit):
        raise ValueError(f"operands ({a}, {b}) outside GF(2^{p.n})")
    return poly_mod(clmul(a, b), p.bits)


def gf_pow(a: GfElement, e: int, p: IrreduciblePoly) -> GfElement:
    result = 1
    while e:
        if e & 1:
            result = gf_mul(result, a, p)
        a = gf_mul(a, a, p)
        e >>= 1
    return result


def gf_inv(a: GfElement, p: IrreduciblePoly) -> GfElement:
    if a == 0:
        raise ZeroDivisionError("zero has no inverse in GF(2^n)")
    return gf_pow(a, (1 << p.n) - 2, p)


@dataclass(frozen=True)
class GammaMatrix:
    """(2n-1) x n matrix; row k is the bit vector of 2^k mod P_n."""

    n: int
    rows: BinaryMatrix

    def row(self, k: int) -> int:
        return self.rows.row(k)


@lru_cache(maxsize=None)
def gamma_matrix(n: int) -> GammaMatrix:
    poly = find_irreducible(n)
    mask = (1 << n) - 1
    words = [1 << i for i in range(min(n, 2 * n - 1))]
    for i in range(n, 2 * n - 1):
        if i == n:
            words.append(poly.tail)
            continue
        prev = words[i - 1]
        shifted = (prev << 1) & mask
        words.append(shifted ^ (words[n] if (prev >> (n - 1)) & 1 else 0))
    return GammaMatrix(n, BinaryMatrix(2 * n - 1, n, tuple(words)))


@lru_cache(maxsize=None)
def m_matrix(n: int, j: int) -> BinaryMatrix:
    """[M_n^(j)]_{p,q} = Gamma_{p+q, j}; bit j of a*b equals a M_n^(j) b^T."""
    if not 0 <= j < n:
        raise ValueError(f"column index {j} out of range for n={n}")
    gamma = gamma_matrix(n)
    words = []
    for p in range(n):
        word = 0
        for q in range(n):
            if (gamma.row(p + q) >> j) & 1:
                word |= 1 << q
        words.append(word)
    return BinaryMatrix(n, n, tuple(words))


@lru_cache(maxsize=None)
def hankel_product_matrix(n: int) -> BinaryMatrix:
    """M_n = Gamma_n M_n^(0); its square windows are the matrices D_i."""
    return gamma_matrix(n).rows @ m_matrix(n, 0)


@lru_cache(maxsize=None)
def d_basis_matrix(n: int, i: int) -> BinaryMatrix:
    """D_i: row j is row (i + j) of M_n."""
    if not 0 <= i < n:
        raise ValueError(f"basis index {i} out of range for n={n}")
    m = hankel_product_matrix(n)
    return BinaryMatrix(n, n, tuple(m.row(i + j) for j in range(n)))
