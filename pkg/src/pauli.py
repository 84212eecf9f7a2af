"""Phased Pauli operators, Pauli-sum observables and dense Pauli expansions.

A PhasedPauli is i^phase X^x Z^z with x, z bitmasks (bit q acts on qubit q).
Labels list qubit 0 first: "XZI" is X on qubit 0 and Z on qubit 1.
"""
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError, IdentityPauliError

_SIGN_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_PREFIX_PHASE = {"": 0, "+": 0, "+i": 1, "i": 1, "-": 2, "-i": 3}
_I_POWERS = np.array([1, 1j, -1, -1j])


@dataclass(frozen=True)
class PhasedPauli:
    n: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise DimensionMismatchError(f"Pauli bits exceed {self.n} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n: int) -> "PhasedPauli":
        return cls(n, 0, 0)

    @classmethod
    def z_string(cls, n: int, m: int) -> "PhasedPauli":
        return cls(n, 0, m)

    @classmethod
    def x_string(cls, n: int, m: int) -> "PhasedPauli":
        return cls(n, m, 0)

    @classmethod
    def single(cls, n: int, qubit: int, kind: str) -> "PhasedPauli":
        label = ["I"] * n
        label[qubit] = kind
        return cls.from_label("".join(label))

    @classmethod
    def from_label(cls, label: str) -> "PhasedPauli":
        """Parse an optional sign (+, -, +i, -i) followed by I/X/Y/Z per qubit."""
        text = label.strip()
        body = text.lstrip("+-i")
        prefix = text[: len(text) - len(body)]
        if prefix not in _PREFIX_PHASE:
            raise ValueError(f"bad Pauli sign prefix '{prefix}'")
        x = z = 0
        ys = 0
        for q, char in enumerate(body.upper()):
            if char == "X":
                x |= 1 << q
            elif char == "Z":
                z |= 1 << q
            elif char == "Y":
                x |= 1 << q
                z |= 1 << q
                ys += 1
            elif char != "I":
                raise ValueError(f"bad Pauli character '{char}' in '{label}'")
        return cls(len(body), x, z, _PREFIX_PHASE[prefix] + ys)

    @property
    def y_count(self) -> int:
        return (self.x & self.z).bit_count()

    @property
    def label(self) -> str:
        """Sign relative to the Y-convention form, then one letter per qubit."""
        chars = []
        for q in range(self.n):
            xb, zb = (self.x >> q) & 1, (self.z >> q) & 1
            chars.append("IZXY"[2 * xb + zb])
        return _SIGN_PREFIX[(self.phase - self.y_count) % 4] + "".join(chars)

    def __str__(self) -> str:
        return self.label

    @property
    def key(self) -> Tuple[int, int]:
        """Support bits, ignoring phase."""
        return self.x, self.z

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def is_z_type(self) -> bool:
        return self.x == 0

    def is_hermitian(self) -> bool:
        return (self.phase - self.y_count) % 2 == 0

    @property
    def sign(self) -> int:
        """+1 or -1 against the Y-convention form; Hermitian operators only."""
        if not self.is_hermitian():
            raise ValueError(f"{self.label} is not Hermitian")
        return 1 if (self.phase - self.y_count) % 4 == 0 else -1

    def hermitian_form(self) -> "PhasedPauli":
        """Same support with the unsigned Hermitian phase i^{|x & z|}."""
        return PhasedPauli(self.n, self.x, self.z, self.y_count)

    def __mul__(self, other: "PhasedPauli") -> "PhasedPauli":
        if self.n != other.n:
            raise DimensionMismatchError("Pauli qubit counts differ")
        phase = self.phase + other.phase + 2 * (self.z & other.x).bit_count()
        return PhasedPauli(self.n, self.x ^ other.x, self.z ^ other.z, phase)

    def commutes_with(self, other: "PhasedPauli") -> bool:
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def dagger(self) -> "PhasedPauli":
        return PhasedPauli(self.n, self.x, self.z, -self.phase + 2 * self.y_count)

    def with_phase(self, phase: int) -> "PhasedPauli":
        return PhasedPauli(self.n, self.x, self.z, phase)

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix, little-endian basis indexing."""
        dim = 1 << self.n
        idx = np.arange(dim)
        out = np.zeros((dim, dim), dtype=complex)
        out[idx ^ self.x, idx] = _I_POWERS[self.phase] * _z_signs(self.n, self.z)
        return out

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        """P |psi> for a statevector (or a batch of column vectors)."""
        dim = 1 << self.n
        idx = np.arange(dim)
        coeff = _I_POWERS[self.phase] * _z_signs(self.n, self.z)
        if amplitudes.ndim > 1:
            coeff = coeff[:, None]
        out = np.empty_like(amplitudes, dtype=complex)
        out[idx ^ self.x] = coeff * amplitudes
        return out


def _z_signs(n: int, z: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return 1 - 2 * (popcount_array(idx & z, n) & 1)


def popcount_array(values: np.ndarray, nbits: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    out = np.zeros_like(values)
    for k in range(nbits):
        out += (values >> k) & 1
    return out


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalised transform along the last axis: out[z] = sum_i (-1)^{z.i} v[i]."""
    out = np.array(values, dtype=complex, copy=True)
    length = out.shape[-1]
    lead = out.shape[:-1]
    h = 1
    while h < length:
        view = out.reshape(*lead, length // (2 * h), 2, h)
        low = view[..., 0, :].copy()
        high = view[..., 1, :].copy()
        view[..., 0, :] = low + high
        view[..., 1, :] = low - high
        h *= 2
    return out


def pauli_expansion(matrix: np.ndarray) -> np.ndarray:
    """All traces tr(O X^x Z^z), indexed [x, z]."""
    dim = matrix.shape[0]
    idx = np.arange(dim)
    shifted = matrix[idx[None, :], idx[None, :] ^ idx[:, None]]
    return walsh_hadamard(shifted)


def hermitian_pauli_coefficients(matrix: np.ndarray) -> np.ndarray:
    """alpha[x, z] = tr(P O) / 2^n with P = i^{|x & z|} X^x Z^z (Y convention)."""
    dim = matrix.shape[0]
    n = dim.bit_length() - 1
    traces = pauli_expansion(matrix)
    idx = np.arange(dim)
    y_counts = popcount_array(idx[:, None] & idx[None, :], n)
    return _I_POWERS[y_counts % 4] * traces / dim


@dataclass(frozen=True)
class PauliSumObservable:
    """O = identity * I + sum_l alpha_l P_l with distinct non-identity P_l.

    Each stored P_l is in unsigned Hermitian form; signs live in alpha_l.
    """

    n: int
    terms: Tuple[Tuple[float, PhasedPauli], ...]
    identity: float = 0.0

    def __post_init__(self):
        normalised = []
        keys = set()
        for coeff, pauli in self.terms:
            if pauli.n != self.n:
                raise DimensionMismatchError("term qubit count differs from observable")
            if pauli.is_identity():
                raise IdentityPauliError("identity terms belong in the identity coefficient")
            if pauli.key in keys:
                raise ValueError(f"duplicate Pauli term {pauli.hermitian_form().label}")
            keys.add(pauli.key)
            normalised.append((float(coeff) * pauli.sign, pauli.hermitian_form()))
        object.__setattr__(self, "terms", tuple(normalised))

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[float, str]]) -> "PauliSumObservable":
        """Build from (coefficient, label) pairs, merging repeats and identities."""
        merged: Dict[Tuple[int, int], float] = {}
        identity = 0.0
        n = None
        for coeff, label in terms:
            pauli = PhasedPauli.from_label(label)
            if n is None:
                n = pauli.n
            elif pauli.n != n:
                raise DimensionMismatchError(f"term '{label}' has {pauli.n} qubits, expected {n}")
            value = float(coeff) * pauli.sign
            if pauli.is_identity():
                identity += value
            else:
                merged[pauli.key] = merged.get(pauli.key, 0.0) + value
        if n is None:
            raise ValueError("empty Pauli sum")
        built = [(c, PhasedPauli(n, x, z, (x & z).bit_count())) for (x, z), c in merged.items()]
        return cls(n, tuple(built), identity)

    @classmethod
    def from_text(cls, text: str) -> "PauliSumObservable":
        """Lines of `coeff pauli-string`; blank lines and # comments ignored."""
        terms = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'coeff pauli-string'")
            terms.append((float(parts[0]), parts[1]))
        return cls.from_terms(terms)

    @classmethod
    def from_dense(cls, matrix: np.ndarray, tol: float = 1e-12) -> "PauliSumObservable":
        dim = matrix.shape[0]
        n = dim.bit_length() - 1
        alpha = hermitian_pauli_coefficients(matrix).real
        terms = []
        for x, z in zip(*np.nonzero(np.abs(alpha) > tol)):
            if x == 0 and z == 0:
                continue
            terms.append((float(alpha[x, z]), PhasedPauli(n, int(x), int(z), (int(x) & int(z)).bit_count())))
        return cls(n, tuple(terms), float(alpha[0, 0]))

    @property
    def trace(self) -> float:
        return self.identity * (1 << self.n)

    @property
    def l1_norm(self) -> float:
        """Sum of |alpha_l| over the non-identity terms."""
        return float(sum(abs(c) for c, _ in self.terms))

    def to_dense(self) -> np.ndarray:
        dim = 1 << self.n
        out = self.identity * np.eye(dim, dtype=complex)
        for coeff, pauli in self.terms:
            out += coeff * pauli.to_matrix()
        return out

    def basis_requirements(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-term arrays (coefficients, support masks, required basis per qubit).

        Basis codes: 0 = X, 1 = Y, 2 = Z, -1 = identity factor.
        """
        count = len(self.terms)
        coeffs = np.array([c for c, _ in self.terms], dtype=float)
        supports = np.array([p.x | p.z for _, p in self.terms], dtype=np.int64)
        required = np.full((count, self.n), -1, dtype=np.int8)
        for row, (_, pauli) in enumerate(self.terms):
            for q in range(self.n):
                xb, zb = (pauli.x >> q) & 1, (pauli.z >> q) & 1
                if xb and zb:
                    required[row, q] = 1
                elif xb:
                    required[row, q] = 0
                elif zb:
                    required[row, q] = 2
        return coeffs, supports, required


def pauli_label_list(paulis: Sequence[PhasedPauli]) -> List[str]:
    return [p.label for p in paulis]
