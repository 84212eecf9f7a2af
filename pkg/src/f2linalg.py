"""Dense linear algebra over F2.

Rows are stored as Python ints, bit j holding column j, so row operations are
single XORs on arbitrary-width words. Bit vectors are plain ints with the
length carried by the caller.
"""
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError, NotHankelError

MAX_DIMENSION = 1 << 16

BitVector = int


def parity(value: int) -> int:
    """Parity of the set bits of a non-negative int."""
    return value.bit_count() & 1


def bits_of(value: int, length: int) -> List[int]:
    return [(value >> i) & 1 for i in range(length)]


def bits_to_int(bits: Iterable[int]) -> int:
    out = 0
    for i, bit in enumerate(bits):
        if int(bit) & 1:
            out |= 1 << i
    return out


@dataclass(frozen=True)
class BinaryMatrix:
    """Matrix over F2 with bit-packed rows."""

    rows: int
    cols: int
    data: Tuple[int, ...]

    def __post_init__(self):
        if not (0 <= self.rows <= MAX_DIMENSION and 0 <= self.cols <= MAX_DIMENSION):
            raise DimensionMismatchError(f"dimensions {self.rows}x{self.cols} out of range")
        if len(self.data) != self.rows:
            raise DimensionMismatchError(
                f"expected {self.rows} packed rows, got {len(self.data)}"
            )
        limit = 1 << self.cols
        for word in self.data:
            if word < 0 or word >= limit:
                raise DimensionMismatchError(f"row word {word} wider than {self.cols} columns")

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BinaryMatrix":
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def identity(cls, n: int) -> "BinaryMatrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def from_words(cls, words: Sequence[int], cols: int) -> "BinaryMatrix":
        return cls(len(words), cols, tuple(int(w) for w in words))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "BinaryMatrix":
        """Build from nested lists of 0/1, row-major."""
        cols = len(rows[0]) if rows else 0
        for row in rows:
            if len(row) != cols:
                raise DimensionMismatchError("ragged rows")
        return cls(len(rows), cols, tuple(bits_to_int(row) for row in rows))

    @classmethod
    def from_array(cls, array: np.ndarray) -> "BinaryMatrix":
        arr = np.asarray(array, dtype=np.uint8) & 1
        if arr.ndim != 2:
            raise DimensionMismatchError("expected a 2-d array")
        return cls.from_rows(arr.tolist())

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for i, word in enumerate(self.data):
            out[i] = bits_of(word, self.cols)
        return out

    def to_lists(self) -> List[List[int]]:
        return [bits_of(word, self.cols) for word in self.data]

    def __getitem__(self, index: Tuple[int, int]) -> int:
        i, j = index
        return (self.data[i] >> j) & 1

    def row(self, i: int) -> BitVector:
        return self.data[i]

    def column(self, j: int) -> BitVector:
        """Column j as a bit vector indexed by row."""
        out = 0
        for i, word in enumerate(self.data):
            if (word >> j) & 1:
                out |= 1 << i
        return out

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_zero(self) -> bool:
        return not any(self.data)

    def transpose(self) -> "BinaryMatrix":
        return BinaryMatrix(self.cols, self.rows, tuple(self.column(j) for j in range(self.cols)))

    def __add__(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatchError("matrix sum shapes differ")
        return BinaryMatrix(self.rows, self.cols, tuple(a ^ b for a, b in zip(self.data, other.data)))

    def __matmul__(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if self.cols != other.rows:
            raise DimensionMismatchError(
                f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}"
            )
        return BinaryMatrix(self.rows, other.cols, tuple(other.vec_mul(word) for word in self.data))

    def mul_vec(self, x: BitVector) -> BitVector:
        """A x, with x a column vector of length cols."""
        out = 0
        for i, word in enumerate(self.data):
            if parity(word & x):
                out |= 1 << i
        return out

    def vec_mul(self, a: BitVector) -> BitVector:
        """a A, with a a row vector of length rows."""
        out = 0
        i = 0
        while a:
            if a & 1:
                out ^= self.data[i]
            a >>= 1
            i += 1
        return out

    def with_entry(self, i: int, j: int, value: int) -> "BinaryMatrix":
        words = list(self.data)
        words[i] = (words[i] & ~(1 << j)) | ((value & 1) << j)
        return BinaryMatrix(self.rows, self.cols, tuple(words))

    def __str__(self) -> str:
        return "\n".join("".join(str(b) for b in bits_of(w, self.cols)) for w in self.data)


@dataclass(frozen=True)
class HankelCoefficients:
    """Anti-diagonal values of an n x n Hankel matrix; bit k is beta_k."""

    n: int
    beta: BitVector

    def to_matrix(self) -> BinaryMatrix:
        out = BinaryMatrix.zeros(self.n, self.n)
        for k in range(2 * self.n - 1):
            if (self.beta >> k) & 1:
                out = out + hankel_matrix(self.n, k)
        return out


def _reduce(data: Sequence[int], cols: int) -> Tuple[List[int], List[int]]:
    """Gauss-Jordan elimination scanning columns 0..cols-1.

    Returns the reduced rows (pivot rows first) and the pivot columns.
    """
    rows = list(data)
    pivots: List[int] = []
    top = 0
    for col in range(cols):
        bit = 1 << col
        found = next((r for r in range(top, len(rows)) if rows[r] & bit), None)
        if found is None:
            continue
        rows[top], rows[found] = rows[found], rows[top]
        for r in range(len(rows)):
            if r != top and rows[r] & bit:
                rows[r] ^= rows[top]
        pivots.append(col)
        top += 1
        if top == len(rows):
            break
    return rows, pivots


def rank_f2(matrix: BinaryMatrix) -> int:
    return len(_reduce(matrix.data, matrix.cols)[1])


def row_basis_f2(words: Sequence[int], cols: int) -> List[int]:
    """A reduced basis of the span of `words` (each a cols-bit row)."""
    rows, pivots = _reduce(words, cols)
    return rows[: len(pivots)]


def solve_f2(a: BinaryMatrix, b: BitVector) -> Optional[BitVector]:
    """Some x with A x = b, free variables set to zero; None if inconsistent."""
    if b >> a.rows:
        raise DimensionMismatchError(f"right-hand side wider than {a.rows} rows")
    rhs = 1 << a.cols
    augmented = [word | (rhs if (b >> i) & 1 else 0) for i, word in enumerate(a.data)]
    rows, pivots = _reduce(augmented, a.cols)
    coeff_mask = rhs - 1
    for word in rows[len(pivots):]:
        if word & rhs and not word & coeff_mask:
            return None
    x = 0
    for r, col in enumerate(pivots):
        if rows[r] & rhs:
            x |= 1 << col
    return x


def nullspace_f2(matrix: BinaryMatrix) -> List[BitVector]:
    """Basis of {x : M x = 0}, one vector per free column."""
    rows, pivots = _reduce(matrix.data, matrix.cols)
    pivot_set = set(pivots)
    basis = []
    for free in range(matrix.cols):
        if free in pivot_set:
            continue
        x = 1 << free
        for r, col in enumerate(pivots):
            if (rows[r] >> free) & 1:
                x |= 1 << col
        basis.append(x)
    return basis


def hankel_matrix(n: int, k: int) -> BinaryMatrix:
    """The n x n matrix with ones exactly on anti-diagonal k."""
    if not 0 <= k <= 2 * n - 2:
        raise ValueError(f"anti-diagonal {k} out of range for n={n}")
    words = tuple((1 << (k - i)) if 0 <= k - i < n else 0 for i in range(n))
    return BinaryMatrix(n, n, words)


def is_hankel(matrix: BinaryMatrix) -> bool:
    if not matrix.is_square:
        raise DimensionMismatchError("Hankel test needs a square matrix")
    n = matrix.rows
    for i in range(n - 1):
        for j in range(1, n):
            if matrix[i, j] != matrix[i + 1, j - 1]:
                return False
    return True


def hankel_decompose(matrix: BinaryMatrix) -> HankelCoefficients:
    if not is_hankel(matrix):
        raise NotHankelError("matrix is not constant along its anti-diagonals")
    n = matrix.rows
    beta = 0
    for k in range(2 * n - 1):
        i = max(0, k - n + 1)
        if matrix[i, k - i]:
            beta |= 1 << k
    return HankelCoefficients(n, beta)


def beta_basis(n: int) -> BinaryMatrix:
    """(2n-1) x n matrix whose column i is the Hankel decomposition of D_i.

    beta^v = beta_basis(n) . v gives the anti-diagonal coefficients of D_v.
    """
    from .gf2n import d_basis_matrix

    columns = [hankel_decompose(d_basis_matrix(n, i)).beta for i in range(n)]
    words = []
    for k in range(2 * n - 1):
        word = 0
        for i, col in enumerate(columns):
            if (col >> k) & 1:
                word |= 1 << i
        words.append(word)
    return BinaryMatrix(2 * n - 1, n, tuple(words))
