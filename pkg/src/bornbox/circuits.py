"""Circuit families, outcome patterns, and the circuit file format.

Three families are supported:

``prod``
    Arbitrary product-state input, a list of Clifford gates
    (H, S, X, Z, CNOT, CZ), computational-basis measurement of the first k
    qubits.

``iqp``
    X-program: every row of a binary matrix is exponentiated at angle pi/4
    (``exp(i pi/4 X^row)``) acting on ``|0..0>``, then the first k qubits are
    measured in the computational basis.

``encoded``
    Classical parity encoding wrapped around an inner circuit: sample the
    inner circuit, keep the first measured bit X, draw Y uniform over n-bit
    strings (n = inner measured count), output ``(X xor Par(Y), Y)``.

File format (one directive per line, ``#`` starts a comment)::

    family prod|iqp|encoded
    qubits <n>                  # prod, iqp
    measure <k>                 # optional, defaults to n
    prep <i> bloch <rx> <ry> <rz>
    prep <i> gates <word>+      # words from H S T X Y Z SDG TDG, applied to |0>
    gate <NAME> <q> [<q2>]
    xrow <b_1> ... <b_n>        # iqp rows, one per line
    inner <path>                # encoded; or "inner" followed by an
                                # indented block holding the inner circuit

Outcome patterns are strings over ``{0, 1, *}``; ``*`` marks a position that
is marginalized over.  Distribution indices use the big-endian reading of the
outcome string (first measured qubit is the most significant bit), so index
order coincides with lexicographic outcome order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .stabcore import GATE_ARITY, GateApp, ProductState


class CircuitSyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class OutcomePattern:
    """Measurement event over {0, 1, *}; ``*`` positions are summed over."""

    trits: str

    def __post_init__(self):
        if not self.trits:
            raise ValueError("empty pattern")
        if any(c not in "01*" for c in self.trits):
            raise ValueError(f"pattern {self.trits!r} must be over 0, 1, *")

    def __str__(self) -> str:
        return self.trits

    @property
    def k(self) -> int:
        return len(self.trits)

    @property
    def fixed(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, int(c)) for i, c in enumerate(self.trits) if c != "*")

    @property
    def wild_count(self) -> int:
        return self.trits.count("*")

    @property
    def is_full(self) -> bool:
        return self.wild_count == 0

    def matches(self, outcome: str) -> bool:
        if len(outcome) != self.k:
            raise ValueError("outcome length mismatch")
        return all(c == "*" or c == o for c, o in zip(self.trits, outcome))


def outcome_to_index(outcome: str) -> int:
    return int(outcome, 2)


def index_to_outcome(index: int, k: int) -> str:
    return format(index, f"0{k}b")


@dataclass(frozen=True)
class ProdCircuit:
    n: int
    k: int
    state: ProductState
    gates: tuple[GateApp, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        if not 1 <= self.k <= self.n:
            raise ValueError("measured count k must satisfy 1 <= k <= n")
        if self.state.n != self.n:
            raise ValueError("prep state size != qubit count")
        for g in self.gates:
            if max(g.qubits) >= self.n:
                raise ValueError(f"gate {g.name} touches qubit outside range")
        object.__setattr__(self, "gates", tuple(self.gates))

    @property
    def family(self) -> str:
        return "prod"


@dataclass(frozen=True)
class IqpCircuit:
    n: int
    k: int
    rows: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        if not 1 <= self.k <= self.n:
            raise ValueError("measured count k must satisfy 1 <= k <= n")
        rows = tuple(tuple(int(b) for b in row) for row in self.rows)
        for row in rows:
            if len(row) != self.n:
                raise ValueError("xrow length != qubit count")
            if any(b not in (0, 1) for b in row):
                raise ValueError("xrow entries must be 0/1")
        object.__setattr__(self, "rows", rows)

    @property
    def family(self) -> str:
        return "iqp"

    def row_matrix(self) -> np.ndarray:
        return np.array(self.rows, dtype=np.uint8).reshape(len(self.rows), self.n)


@dataclass(frozen=True)
class EncodedCircuit:
    inner: "Circuit"

    def __post_init__(self):
        if circuit_k(self.inner) < 1:
            raise ValueError("inner circuit must measure at least one bit")

    @property
    def family(self) -> str:
        return "encoded"

    @property
    def y_bits(self) -> int:
        """Length of the uniform pad Y (= inner measured count)."""
        return circuit_k(self.inner)

    @property
    def k(self) -> int:
        return self.y_bits + 1

    @property
    def n(self) -> int:
        return circuit_n(self.inner)


Circuit = Union[ProdCircuit, IqpCircuit, EncodedCircuit]


def circuit_k(c: Circuit) -> int:
    return c.k


def circuit_n(c: Circuit) -> int:
    return c.n


def ce_encode(inner: Circuit) -> EncodedCircuit:
    """Wrap a circuit in the parity encoding (X xor Par(Y), Y)."""
    return EncodedCircuit(inner)


# ---------------------------------------------------------------------------
# Single-qubit preparation words
# ---------------------------------------------------------------------------

_SQ = math.sqrt(0.5)
PREP_GATES = {
    "H": np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
    "TDG": np.array([[1, 0], [0, np.exp(-1j * math.pi / 4)]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def bloch_from_words(words) -> tuple[float, float, float]:
    """Bloch vector of (last word) ... (first word) |0>."""
    psi = np.array([1.0, 0.0], dtype=complex)
    for w in words:
        key = w.upper()
        if key not in PREP_GATES:
            raise ValueError(f"unknown prep gate word {w!r}")
        psi = PREP_GATES[key] @ psi
    rx = 2.0 * (psi[0].conjugate() * psi[1]).real
    ry = 2.0 * (psi[0].conjugate() * psi[1]).imag
    rz = (abs(psi[0]) ** 2 - abs(psi[1]) ** 2).real
    return (float(rx), float(ry), float(rz))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _strip_comment(line: str) -> str:
    cut = line.find("#")
    return line if cut < 0 else line[:cut]


def parse_pattern(text: str) -> OutcomePattern:
    try:
        return OutcomePattern(text.strip())
    except ValueError as exc:
        raise CircuitSyntaxError(str(exc)) from exc


def parse_circuit(text: str, base_dir: str | Path | None = None) -> Circuit:
    lines = text.splitlines()
    numbered = []
    for idx, raw in enumerate(lines, start=1):
        stripped = _strip_comment(raw)
        if stripped.strip():
            numbered.append((idx, stripped))
    if not numbered:
        raise CircuitSyntaxError("empty circuit description")

    first_no, first = numbered[0]
    head = first.split()
    if len(head) != 2 or head[0] != "family":
        raise CircuitSyntaxError("first directive must be 'family <name>'", first_no)
    family = head[1]
    if family == "prod":
        return _parse_prod(numbered[1:])
    if family == "iqp":
        return _parse_iqp(numbered[1:])
    if family == "encoded":
        return _parse_encoded(numbered[1:], lines, base_dir)
    raise CircuitSyntaxError(f"unknown family {family!r}", first_no)


def _parse_int(tok: str, what: str, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise CircuitSyntaxError(f"bad {what} {tok!r}", line) from None


def _parse_float(tok: str, what: str, line: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise CircuitSyntaxError(f"bad {what} {tok!r}", line) from None


def _parse_prod(body) -> ProdCircuit:
    n = None
    k = None
    preps: dict[int, tuple[float, float, float]] = {}
    gates: list[GateApp] = []
    for line_no, line in body:
        toks = line.split()
        kind = toks[0]
        if kind == "qubits":
            if len(toks) != 2:
                raise CircuitSyntaxError("qubits takes one integer", line_no)
            n = _parse_int(toks[1], "qubit count", line_no)
        elif kind == "measure":
            if len(toks) != 2:
                raise CircuitSyntaxError("measure takes one integer", line_no)
            k = _parse_int(toks[1], "measured count", line_no)
        elif kind == "prep":
            if n is None:
                raise CircuitSyntaxError("prep before qubits", line_no)
            if len(toks) < 3:
                raise CircuitSyntaxError("prep needs qubit and form", line_no)
            q = _parse_int(toks[1], "qubit index", line_no)
            if not 0 <= q < n:
                raise CircuitSyntaxError(f"prep qubit {q} out of range", line_no)
            if q in preps:
                raise CircuitSyntaxError(f"duplicate prep for qubit {q}", line_no)
            if toks[2] == "bloch":
                if len(toks) != 6:
                    raise CircuitSyntaxError("prep bloch needs 3 components", line_no)
                vec = tuple(_parse_float(t, "bloch component", line_no)
                            for t in toks[3:6])
                if sum(c * c for c in vec) > 1.0 + 1e-9:
                    raise CircuitSyntaxError("bloch vector outside unit ball", line_no)
                preps[q] = vec
            elif toks[2] == "gates":
                if len(toks) < 4:
                    raise CircuitSyntaxError("prep gates needs at least one word", line_no)
                try:
                    preps[q] = bloch_from_words(toks[3:])
                except ValueError as exc:
                    raise CircuitSyntaxError(str(exc), line_no) from exc
            else:
                raise CircuitSyntaxError(f"unknown prep form {toks[2]!r}", line_no)
        elif kind == "gate":
            if n is None:
                raise CircuitSyntaxError("gate before qubits", line_no)
            if len(toks) < 3:
                raise CircuitSyntaxError("gate needs a name and qubits", line_no)
            name = toks[1]
            if name not in GATE_ARITY:
                raise CircuitSyntaxError(f"unknown gate {name!r}", line_no)
            qs = tuple(_parse_int(t, "qubit index", line_no) for t in toks[2:])
            try:
                gate = GateApp(name, qs)
            except ValueError as exc:
                raise CircuitSyntaxError(str(exc), line_no) from exc
            if max(qs) >= n:
                raise CircuitSyntaxError("gate qubit out of range", line_no)
            gates.append(gate)
        else:
            raise CircuitSyntaxError(f"unknown directive {kind!r} in prod circuit", line_no)
    if n is None:
        raise CircuitSyntaxError("missing qubits directive")
    bloch = tuple(preps.get(q, (0.0, 0.0, 1.0)) for q in range(n))
    try:
        return ProdCircuit(n, n if k is None else k, ProductState(bloch), tuple(gates))
    except ValueError as exc:
        raise CircuitSyntaxError(str(exc)) from exc


def _parse_iqp(body) -> IqpCircuit:
    n = None
    k = None
    rows: list[tuple[int, ...]] = []
    for line_no, line in body:
        toks = line.split()
        kind = toks[0]
        if kind == "qubits":
            n = _parse_int(toks[1], "qubit count", line_no) if len(toks) == 2 else None
            if n is None:
                raise CircuitSyntaxError("qubits takes one integer", line_no)
        elif kind == "measure":
            if len(toks) != 2:
                raise CircuitSyntaxError("measure takes one integer", line_no)
            k = _parse_int(toks[1], "measured count", line_no)
        elif kind == "xrow":
            if n is None:
                raise CircuitSyntaxError("xrow before qubits", line_no)
            if len(toks) != n + 1:
                raise CircuitSyntaxError(f"xrow needs {n} bits", line_no)
            bits = tuple(_parse_int(t, "xrow bit", line_no) for t in toks[1:])
            if any(b not in (0, 1) for b in bits):
                raise CircuitSyntaxError("xrow entries must be 0/1", line_no)
            rows.append(bits)
        else:
            raise CircuitSyntaxError(f"unknown directive {kind!r} in iqp circuit", line_no)
    if n is None:
        raise CircuitSyntaxError("missing qubits directive")
    try:
        return IqpCircuit(n, n if k is None else k, tuple(rows))
    except ValueError as exc:
        raise CircuitSyntaxError(str(exc)) from exc


def _parse_encoded(body, raw_lines, base_dir) -> EncodedCircuit:
    if not body:
        raise CircuitSyntaxError("encoded circuit needs an inner directive")
    line_no, line = body[0]
    toks = line.split()
    if toks[0] != "inner":
        raise CircuitSyntaxError("encoded circuit expects 'inner'", line_no)
    if len(toks) == 2:
        if base_dir is None:
            base_dir = Path.cwd()
        path = Path(base_dir) / toks[1]
        if len(body) > 1:
            raise CircuitSyntaxError("unexpected directives after inner path", body[1][0])
        try:
            text = path.read_text()
        except OSError as exc:
            raise CircuitSyntaxError(f"cannot read inner circuit {path}: {exc}", line_no)
        return EncodedCircuit(parse_circuit(text, base_dir=path.parent))
    if len(toks) > 2:
        raise CircuitSyntaxError("inner takes at most one path", line_no)

    # Inline form: collect the indented block following the inner directive.
    block: list[str] = []
    indent = None
    for raw in raw_lines[line_no:]:
        stripped = _strip_comment(raw)
        if not stripped.strip():
            continue
        if not stripped[0].isspace():
            raise CircuitSyntaxError("unindented directive inside inner block",
                                     line_no)
        if indent is None:
            indent = len(stripped) - len(stripped.lstrip())
        if len(stripped) - len(stripped.lstrip()) < indent:
            raise CircuitSyntaxError("inconsistent indentation in inner block",
                                     line_no)
        block.append(stripped[indent:])
    if not block:
        raise CircuitSyntaxError("empty inner block", line_no)
    return EncodedCircuit(parse_circuit("\n".join(block), base_dir=base_dir))


# ---------------------------------------------------------------------------
# Serialization (canonical form; parse(serialize(c)) == c)
# ---------------------------------------------------------------------------

def serialize_circuit(c: Circuit) -> str:
    return "\n".join(_serialize_lines(c)) + "\n"


def _serialize_lines(c: Circuit) -> list[str]:
    if isinstance(c, ProdCircuit):
        out = ["family prod", f"qubits {c.n}", f"measure {c.k}"]
        for q, vec in enumerate(c.state.bloch):
            if vec != (0.0, 0.0, 1.0):
                out.append(f"prep {q} bloch {vec[0]!r} {vec[1]!r} {vec[2]!r}")
        for g in c.gates:
            out.append("gate " + g.name + " " + " ".join(str(q) for q in g.qubits))
        return out
    if isinstance(c, IqpCircuit):
        out = ["family iqp", f"qubits {c.n}", f"measure {c.k}"]
        for row in c.rows:
            out.append("xrow " + " ".join(str(b) for b in row))
        return out
    if isinstance(c, EncodedCircuit):
        out = ["family encoded", "inner"]
        out.extend("  " + line for line in _serialize_lines(c.inner))
        return out
    raise TypeError(f"not a circuit: {c!r}")
