"""The 2^n + 1 element MUB ensemble as Z-tableaus and phased stabilizer generators."""
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

from .errors import DimensionMismatchError, IdentityPauliError, MCMError
from .f2linalg import BinaryMatrix, BitVector, beta_basis, rank_f2, solve_f2
from .gf2n import IrreduciblePoly, find_irreducible, gf_mul, m_matrix
from .models import ElementDump, EnsembleDump
from .pauli import PhasedPauli, pauli_label_list

__all__ = [
    "PhasedPauli",
    "ZTableau",
    "MubElement",
    "MubEnsemble",
    "build_ensemble",
    "d_matrix",
    "stabilizer_generators",
    "element_generators",
    "element_stabilizers",
    "stabilizer_group",
    "element_for_pauli",
    "ensemble_dump",
]


@dataclass(frozen=True)
class ZTableau:
    """Rows g_i with X part C[i] and Z part D[i]; sign bit i marks -g_i."""

    C: BinaryMatrix
    D: BinaryMatrix
    signs: int = 0

    def __post_init__(self):
        if not (self.C.is_square and self.D.is_square and self.C.rows == self.D.rows):
            raise DimensionMismatchError("tableau blocks must both be n x n")

    @classmethod
    def z_basis(cls, n: int) -> "ZTableau":
        return cls(BinaryMatrix.zeros(n, n), BinaryMatrix.identity(n))

    @classmethod
    def from_paulis(cls, paulis: Sequence[PhasedPauli]) -> "ZTableau":
        n = len(paulis)
        signs = 0
        for i, p in enumerate(paulis):
            if p.sign < 0:
                signs |= 1 << i
        return cls(
            BinaryMatrix(n, n, tuple(p.x for p in paulis)),
            BinaryMatrix(n, n, tuple(p.z for p in paulis)),
            signs,
        )

    @property
    def n(self) -> int:
        return self.C.rows

    def row_pauli(self, i: int) -> PhasedPauli:
        x, z = self.C.row(i), self.D.row(i)
        sign = 2 if (self.signs >> i) & 1 else 0
        return PhasedPauli(self.n, x, z, (x & z).bit_count() + sign)

    def paulis(self) -> List[PhasedPauli]:
        return [self.row_pauli(i) for i in range(self.n)]

    def unsigned(self) -> "ZTableau":
        return ZTableau(self.C, self.D)

    def is_valid(self) -> bool:
        """Rows pairwise commute and are independent."""
        rows = self.paulis()
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if not rows[i].commutes_with(rows[j]):
                    return False
        stacked = BinaryMatrix(
            self.n, 2 * self.n, tuple(p.x | (p.z << self.n) for p in rows)
        )
        return rank_f2(stacked) == self.n


@dataclass(frozen=True)
class MubElement:
    index: int
    label: Optional[int]
    tableau: ZTableau


@dataclass(frozen=True)
class MubEnsemble:
    """Index 0 is the Z basis; index v + 1 carries the tableau [I, D_v]."""

    n: int
    poly: IrreduciblePoly
    elements: Tuple[MubElement, ...]
    beta: BinaryMatrix

    def __len__(self) -> int:
        return len(self.elements)

    def element(self, index: int) -> MubElement:
        return self.elements[index]

    def label_of(self, index: int) -> Optional[int]:
        return None if index == 0 else index - 1


@lru_cache(maxsize=None)
def d_matrix(n: int, v: int) -> BinaryMatrix:
    """Row i is (v * 2^i) M_n^(0)."""
    poly = find_irreducible(n)
    if not 0 <= v < (1 << n):
        raise ValueError(f"label {v} outside GF(2^{n})")
    m0 = m_matrix(n, 0)
    return BinaryMatrix(n, n, tuple(m0.vec_mul(gf_mul(v, 1 << i, poly)) for i in range(n)))


def stabilizer_generators(n: int, v: int) -> List[PhasedPauli]:
    """g_i = i^{alpha_ii} X_i Z^{row i of D_v}."""
    d = d_matrix(n, v)
    return [PhasedPauli(n, 1 << i, d.row(i), (d.row(i) >> i) & 1) for i in range(n)]


@lru_cache(maxsize=None)
def build_ensemble(n: int) -> MubEnsemble:
    poly = find_irreducible(n)
    identity = BinaryMatrix.identity(n)
    elements = [MubElement(0, None, ZTableau.z_basis(n))]
    for v in range(1 << n):
        elements.append(MubElement(v + 1, v, ZTableau(identity, d_matrix(n, v))))
    return MubEnsemble(n, poly, tuple(elements), beta_basis(n))


def element_generators(ens: MubEnsemble, index: int) -> List[PhasedPauli]:
    return ens.element(index).tableau.paulis()


def stabilizer_group(generators: Sequence[PhasedPauli]) -> List[PhasedPauli]:
    """S_m for m = 0 .. 2^k - 1, products taken in ascending generator order."""
    if not generators:
        return []
    n = generators[0].n
    group = [PhasedPauli.identity(n)]
    for m in range(1, 1 << len(generators)):
        top = m.bit_length() - 1
        group.append(group[m ^ (1 << top)] * generators[top])
    return group


def element_stabilizers(ens: MubEnsemble, index: int) -> List[PhasedPauli]:
    """Signed S_m realised by the synthesized circuit U, i.e. products of U^dag Z_i U."""
    from .circuit import synthesize, ztableau_of

    return stabilizer_group(ztableau_of(synthesize(ens, index)).paulis())


def element_for_pauli(ens: MubEnsemble, pauli: PhasedPauli) -> Tuple[int, BitVector]:
    """The element whose stabilizer group holds P up to phase, and its exponent m."""
    if pauli.n != ens.n:
        raise DimensionMismatchError("Pauli and ensemble qubit counts differ")
    if pauli.is_identity():
        raise IdentityPauliError("the identity belongs to every element")
    if pauli.x == 0:
        return 0, pauli.z
    a, b = pauli.x, pauli.z
    # Column k of the system is D_k a, read off the Hankel coefficients beta^(k)
    words = []
    for i in range(ens.n):
        word = 0
        for j in range(ens.n):
            if (a >> j) & 1:
                word ^= ens.beta.row(i + j)
        words.append(word)
    v = solve_f2(BinaryMatrix(ens.n, ens.n, tuple(words)), b)
    if v is None:
        raise MCMError(f"no ensemble element contains {pauli.label}")
    return v + 1, a


def ensemble_dump(ens: MubEnsemble) -> EnsembleDump:
    elements = [
        ElementDump(
            index=el.index,
            label=el.label,
            C=el.tableau.C.to_lists(),
            D=el.tableau.D.to_lists(),
            generators=pauli_label_list(el.tableau.paulis()),
        )
        for el in ens.elements
    ]
    return EnsembleDump(n=ens.n, poly=ens.poly.bits, elements=elements)
