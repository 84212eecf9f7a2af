"""Gate-list circuits, Z-tableau updates, MCM circuit synthesis and Pauli conjugation.

A circuit applies its gates in list order, so the unitary of [V_1, ..., V_k]
is U = V_k ... V_1 and the Z-tableau of U holds the rows U^dag Z_i U.
"""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import DimensionMismatchError, UnsupportedGateError
from .f2linalg import BinaryMatrix
from .mub import MubEnsemble, ZTableau
from .pauli import PhasedPauli


class GateKind(str, Enum):
    H = "H"
    S = "S"
    SDG = "Sdg"
    CZ = "CZ"
    CX = "CX"
    X = "X"
    Y = "Y"
    Z = "Z"


TWO_QUBIT_GATES = frozenset({GateKind.CZ, GateKind.CX})
_ADJOINT = {GateKind.S: GateKind.SDG, GateKind.SDG: GateKind.S}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 2 if self.kind in TWO_QUBIT_GATES else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind.value} takes {arity} qubit(s), got {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"{self.kind.value} needs two distinct qubits")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")

    def adjoint(self) -> "Gate":
        return Gate(_ADJOINT.get(self.kind, self.kind), self.qubits)

    def __str__(self) -> str:
        return " ".join([self.kind.value, *(str(q) for q in self.qubits)])

    @classmethod
    def parse(cls, line: str) -> "Gate":
        parts = line.split()
        names = {kind.value.upper(): kind for kind in GateKind}
        name = parts[0].upper()
        if name not in names:
            raise UnsupportedGateError(f"unknown gate '{parts[0]}'")
        return cls(names[name], tuple(int(q) for q in parts[1:]))


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: Tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for gate in self.gates:
            if any(q >= self.n for q in gate.qubits):
                raise DimensionMismatchError(f"gate {gate} outside {self.n} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n, tuple(g.adjoint() for g in reversed(self.gates)))

    def compose(self, other: "Circuit") -> "Circuit":
        """Run self, then other."""
        if other.n != self.n:
            raise DimensionMismatchError("circuit qubit counts differ")
        return Circuit(self.n, self.gates + other.gates)

    def count(self, kind: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def to_text(self, label: Optional[int] = None) -> str:
        header = f"# n={self.n}" + (f" v={label}" if label is not None else "")
        return "\n".join([header, *(str(g) for g in self.gates)]) + "\n"

    @classmethod
    def from_text(cls, text: str, n: Optional[int] = None) -> "Circuit":
        """Parse the one-gate-per-line format; n comes from the header if absent."""
        gates = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if token.startswith("n=") and n is None:
                        n = int(token[2:])
                continue
            gates.append(Gate.parse(line))
        if n is None:
            n = 1 + max((q for g in gates for q in g.qubits), default=0)
        return cls(n, tuple(gates))

    def to_dict(self, label: Optional[int] = None) -> Dict:
        return {
            "n": self.n,
            "v": label,
            "gates": [{"kind": g.kind.value, "qubits": list(g.qubits)} for g in self.gates],
        }


def apply_gate_to_ztableau(tableau: ZTableau, gate: Gate) -> ZTableau:
    """Column update of [C, D] for H, S (Sdg acts the same way on the bits) and CZ."""
    c, d = list(tableau.C.data), list(tableau.D.data)
    if gate.kind == GateKind.H:
        (a,) = gate.qubits
        bit = 1 << a
        for i in range(len(c)):
            ci, di = c[i] & bit, d[i] & bit
            c[i] = (c[i] & ~bit) | di
            d[i] = (d[i] & ~bit) | ci
    elif gate.kind in (GateKind.S, GateKind.SDG):
        (a,) = gate.qubits
        d = [di ^ (1 << a) if (ci >> a) & 1 else di for ci, di in zip(c, d)]
    elif gate.kind == GateKind.CZ:
        a, b = gate.qubits
        for i in range(len(c)):
            if (c[i] >> b) & 1:
                d[i] ^= 1 << a
            if (c[i] >> a) & 1:
                d[i] ^= 1 << b
    else:
        raise UnsupportedGateError(f"{gate.kind.value} has no Z-tableau update rule")
    n = tableau.n
    return ZTableau(BinaryMatrix(n, n, tuple(c)), BinaryMatrix(n, n, tuple(d)), tableau.signs)


def module_gates(n: int, k: int) -> List[Gate]:
    """Gates of module M_k: S(k/2) for even k, then CZ pairs on anti-diagonal k."""
    if not 0 <= k <= 2 * n - 2:
        raise ValueError(f"module index {k} outside 0..{2 * n - 2}")
    gates = []
    if k % 2 == 0:
        gates.append(Gate(GateKind.S, (k // 2,)))
    p, q = (0, k) if k < n - 1 else (k - n + 1, n - 1)
    while p < q:
        gates.append(Gate(GateKind.CZ, (p, q)))
        p += 1
        q -= 1
    return gates


def module_order(n: int) -> List[int]:
    """M_t and M_{t+n} act on disjoint qubits, so they are emitted side by side."""
    order = []
    for t in range(n - 1):
        order.extend([t, t + n])
    order.append(n - 1)
    return order


def synthesize(ens: MubEnsemble, index: int) -> Circuit:
    """-S-CZ-H- circuit mapping the element's tableau [I, D_v] to [O, I]."""
    n = ens.n
    if not 0 <= index < len(ens):
        raise ValueError(f"element index {index} outside 0..{len(ens) - 1}")
    if index == 0:
        return Circuit(n)
    beta = ens.beta.mul_vec(index - 1)
    gates: List[Gate] = []
    for k in module_order(n):
        if (beta >> k) & 1:
            gates.extend(module_gates(n, k))
    gates.extend(Gate(GateKind.H, (q,)) for q in range(n))
    return Circuit(n, tuple(gates))


def synthesize_all(ens: MubEnsemble) -> Tuple[Circuit, ...]:
    return tuple(synthesize(ens, i) for i in range(len(ens)))


def circuit_depth(circuit: Circuit) -> int:
    """ASAP layering on all-to-all connectivity."""
    level = [0] * circuit.n
    depth = 0
    for gate in circuit.gates:
        layer = 1 + max(level[q] for q in gate.qubits)
        for q in gate.qubits:
            level[q] = layer
        depth = max(depth, layer)
    return depth


# Images of X and Z on the gate's qubits under P -> G P G^dag, as
# (x bits, z bits, phase) in local coordinates (bit 0 = first qubit).
_PUSH_TABLE: Dict[GateKind, Dict[str, Tuple[int, int, int]]] = {
    GateKind.H: {"X0": (0, 1, 0), "Z0": (1, 0, 0)},
    GateKind.S: {"X0": (1, 1, 1), "Z0": (0, 1, 0)},
    GateKind.SDG: {"X0": (1, 1, 3), "Z0": (0, 1, 0)},
    GateKind.X: {"X0": (1, 0, 0), "Z0": (0, 1, 2)},
    GateKind.Y: {"X0": (1, 0, 2), "Z0": (0, 1, 2)},
    GateKind.Z: {"X0": (1, 0, 2), "Z0": (0, 1, 0)},
    GateKind.CZ: {"X0": (0b01, 0b10, 0), "Z0": (0, 0b01, 0), "X1": (0b10, 0b01, 0), "Z1": (0, 0b10, 0)},
    GateKind.CX: {"X0": (0b11, 0, 0), "Z0": (0, 0b01, 0), "X1": (0b10, 0, 0), "Z1": (0, 0b11, 0)},
}


@lru_cache(maxsize=None)
def _local_image(kind: GateKind, adjoint: bool, x: int, z: int) -> Tuple[int, int, int]:
    """Image of the local operator X^x Z^z (2-bit local masks)."""
    if adjoint:
        kind = _ADJOINT.get(kind, kind)
    table = _PUSH_TABLE[kind]
    result = PhasedPauli.identity(2)
    for q in range(2):
        for axis, bits in (("X", x), ("Z", z)):
            if (bits >> q) & 1:
                gx, gz, gp = table[f"{axis}{q}"]
                result = result * PhasedPauli(2, gx, gz, gp)
    return result.x, result.z, result.phase


def _conjugate_gate(pauli: PhasedPauli, gate: Gate, adjoint: bool) -> PhasedPauli:
    qubits = gate.qubits
    local_x = local_z = 0
    mask = 0
    for slot, q in enumerate(qubits):
        mask |= 1 << q
        local_x |= ((pauli.x >> q) & 1) << slot
        local_z |= ((pauli.z >> q) & 1) << slot
    if not (local_x or local_z):
        return pauli
    ix, iz, phase = _local_image(gate.kind, adjoint, local_x, local_z)
    x, z = pauli.x & ~mask, pauli.z & ~mask
    for slot, q in enumerate(qubits):
        x |= ((ix >> slot) & 1) << q
        z |= ((iz >> slot) & 1) << q
    return PhasedPauli(pauli.n, x, z, pauli.phase + phase)


def conjugate_pauli(circuit: Circuit, pauli: PhasedPauli, direction: str = "forward") -> PhasedPauli:
    """U^dag P U for direction "forward", U P U^dag for "inverse", phase exact."""
    if pauli.n != circuit.n:
        raise DimensionMismatchError("Pauli and circuit qubit counts differ")
    if direction == "forward":
        for gate in reversed(circuit.gates):
            pauli = _conjugate_gate(pauli, gate, adjoint=True)
    elif direction == "inverse":
        for gate in circuit.gates:
            pauli = _conjugate_gate(pauli, gate, adjoint=False)
    else:
        raise ValueError(f"direction must be 'forward' or 'inverse', got '{direction}'")
    return pauli


def ztableau_of(circuit: Circuit) -> ZTableau:
    """Rows U^dag Z_i U with their signs."""
    rows = [conjugate_pauli(circuit, PhasedPauli.z_string(circuit.n, 1 << i)) for i in range(circuit.n)]
    return ZTableau.from_paulis(rows)


_STIM_GATES = {
    "H": GateKind.H,
    "S": GateKind.S,
    "S_DAG": GateKind.SDG,
    "CX": GateKind.CX,
    "CNOT": GateKind.CX,
    "ZCX": GateKind.CX,
    "CZ": GateKind.CZ,
    "ZCZ": GateKind.CZ,
    "X": GateKind.X,
    "Y": GateKind.Y,
    "Z": GateKind.Z,
}


def from_stim(stim_circuit, n: int) -> Circuit:
    """Convert a stim.Circuit over {H, S, S_DAG, CX, CZ, X, Y, Z, I} to a Circuit."""
    gates: List[Gate] = []
    for instruction in stim_circuit.flattened():
        name = instruction.name
        if name in ("I", "TICK"):
            continue
        if name not in _STIM_GATES:
            raise UnsupportedGateError(f"stim gate {name} is outside the supported set")
        kind = _STIM_GATES[name]
        targets = [t.value for t in instruction.targets_copy()]
        arity = 2 if kind in TWO_QUBIT_GATES else 1
        for i in range(0, len(targets), arity):
            gates.append(Gate(kind, tuple(targets[i : i + arity])))
    return Circuit(n, tuple(gates))


def pauli_layer(n: int, choices: Iterable[int]) -> Circuit:
    """Single-qubit Pauli layer; choice 0..3 per qubit maps to I, X, Y, Z."""
    kinds = (None, GateKind.X, GateKind.Y, GateKind.Z)
    gates = [Gate(kinds[c], (q,)) for q, c in enumerate(choices) if c]
    return Circuit(n, tuple(gates))


def basis_change_circuit(n: int, bases: Sequence[int]) -> Circuit:
    """Rotate per-qubit bases (0 = X, 1 = Y, 2 = Z) onto the computational basis."""
    gates: List[Gate] = []
    for q, basis in enumerate(bases):
        if basis == 0:
            gates.append(Gate(GateKind.H, (q,)))
        elif basis == 1:
            gates.extend([Gate(GateKind.SDG, (q,)), Gate(GateKind.H, (q,))])
    return Circuit(n, tuple(gates))
