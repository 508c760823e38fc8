"""Opcode-frequency features, the corpus feature matrix and standardization."""

from __future__ import annotations

import csv
import logging
import os
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .bytecode import Instruction, disassemble
from .errors import InsufficientDataError, MalformedInputError, SchemaMismatchError, ShapeError
from .ingest import Corpus, Label
from .opcodes import MNEMONICS

log = logging.getLogger(__name__)


def count_opcodes(instructions: Iterable[Instruction]) -> dict[str, int]:
    """Tally mnemonics. PUSH immediates only count toward their PUSH-N."""
    return dict(Counter(ins.mnemonic for ins in instructions))


@dataclass(frozen=True)
class FeatureSchema:
    mnemonics: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "mnemonics", tuple(self.mnemonics))
        if len(set(self.mnemonics)) != len(self.mnemonics):
            raise ValueError("duplicate mnemonics in schema")

    def __len__(self):
        return len(self.mnemonics)

    def __iter__(self):
        return iter(self.mnemonics)

    def __contains__(self, name):
        return name in self.mnemonics

    def index(self, name: str) -> int:
        try:
            return self.mnemonics.index(name)
        except ValueError:
            raise SchemaMismatchError(name) from None


def build_schema(corpus_counts: Sequence[Mapping[str, int]]) -> FeatureSchema:
    """Sorted union of every mnemonic seen at least once."""
    if not corpus_counts:
        raise InsufficientDataError("build_schema needs at least one count map")
    names = set()
    for counts in corpus_counts:
        names.update(k for k, v in counts.items() if v > 0)
    return FeatureSchema(tuple(sorted(names)))


@dataclass(frozen=True)
class FeatureVector:
    contract: str
    counts: tuple[int, ...]


def vectorize(counts: Mapping[str, int], schema: FeatureSchema, contract: str = "") -> FeatureVector:
    for name in counts:
        if name not in schema:
            raise SchemaMismatchError(name)
    return FeatureVector(contract, tuple(int(counts.get(m, 0)) for m in schema))


@dataclass
class FeatureMatrix:
    """Count matrix with one row per contract, columns in schema order."""

    schema: FeatureSchema
    X: np.ndarray
    labels: np.ndarray
    addresses: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.schema):
            raise ShapeError(f"matrix has shape {self.X.shape}, schema has {len(self.schema)} columns")
        if len(self.labels) != self.X.shape[0]:
            raise ShapeError("labels do not align with rows")
        if not self.addresses:
            self.addresses = tuple(f"row{i}" for i in range(len(self.labels)))
        self.addresses = tuple(self.addresses)
        if len(self.addresses) != len(self.labels):
            raise ShapeError("addresses do not align with rows")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def columns(self) -> tuple[str, ...]:
        return self.schema.mnemonics

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.schema.index(name)]

    def rows(self, index) -> FeatureMatrix:
        index = np.asarray(index)
        return FeatureMatrix(
            self.schema, self.X[index], self.labels[index],
            tuple(self.addresses[i] for i in np.arange(self.n_rows)[index]),
        )

    def select(self, names: Sequence[str]) -> FeatureMatrix:
        idx = [self.schema.index(n) for n in names]
        return FeatureMatrix(FeatureSchema(tuple(names)), self.X[:, idx], self.labels, self.addresses)

    def class_rows(self, label: Label) -> np.ndarray:
        return self.X[self.labels == int(label)]

    def vectors(self) -> list[FeatureVector]:
        return [FeatureVector(a, tuple(int(v) for v in row)) for a, row in zip(self.addresses, self.X)]


def featurize(corpus: Corpus, schema: FeatureSchema | None = None) -> FeatureMatrix:
    """Disassemble every fetched record and build the count matrix.

    Records without bytecode are skipped with a warning; empty-code contracts
    yield all-zero rows.
    """
    kept = []
    skipped = []
    for rec in corpus:
        if rec.bytecode is None:
            skipped.append(rec.address)
            continue
        kept.append((rec, count_opcodes(disassemble(rec.bytecode))))
    if skipped:
        log.warning("%d records have no bytecode and were excluded: %s", len(skipped), ", ".join(skipped[:5]))
    if not kept:
        raise InsufficientDataError("no records with bytecode to featurize")
    if schema is None:
        schema = build_schema([c for _, c in kept])
    X = np.array([vectorize(c, schema).counts for _, c in kept], dtype=float).reshape(len(kept), len(schema))
    return FeatureMatrix(
        schema, X,
        np.array([int(r.label) for r, _ in kept]),
        tuple(r.address for r, _ in kept),
    )


# ------------------------------------------------------------ standardization


@dataclass(frozen=True)
class Standardization:
    means: np.ndarray
    scales: np.ndarray
    dropped_columns: frozenset[int]

    @property
    def retained(self) -> np.ndarray:
        return np.array([i for i in range(len(self.means)) if i not in self.dropped_columns], dtype=int)

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        keep = self.retained
        return (X[:, keep] - self.means[keep]) / self.scales[keep]

    def invert(self, Z) -> np.ndarray:
        """Map standardized values back; dropped columns come back as their constant mean."""
        Z = np.asarray(Z, dtype=float)
        out = np.tile(self.means, (Z.shape[0], 1))
        keep = self.retained
        out[:, keep] = Z * self.scales[keep] + self.means[keep]
        return out


def fit_standardization(X) -> Standardization:
    """Per-column mean and population standard deviation (ddof=0)."""
    if isinstance(X, FeatureMatrix):
        X = X.X
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientDataError("standardization needs at least 2 rows")
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    # relative test so huge constant columns don't survive on rounding noise
    tiny = scales <= 1e-12 * np.maximum(1.0, np.abs(means))
    dropped = frozenset(int(i) for i in np.flatnonzero(tiny))
    scales = np.where(tiny, 1.0, scales)
    return Standardization(means, scales, dropped)


# ------------------------------------------------------------------ CSV I/O


def save_matrix(matrix: FeatureMatrix, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["address", "label", *matrix.schema])
        for addr, lab, row in zip(matrix.addresses, matrix.labels, matrix.X):
            w.writerow([addr, int(lab), *(_fmt(v) for v in row)])


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def load_matrix(path: str | os.PathLike) -> FeatureMatrix:
    """Load the native ``address,label,<mnemonic...>`` format."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["address", "label"]:
            raise MalformedInputError(f"{path}: expected header 'address,label,...'", line=1)
        addrs, labels, rows = [], [], []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise MalformedInputError(f"{path}: line {line} has {len(row)} fields", line=line)
            addrs.append(row[0])
            labels.append(int(Label.parse(row[1])))
            rows.append([float(v) for v in row[2:]])
    schema = FeatureSchema(tuple(header[2:]))
    X = np.array(rows, dtype=float).reshape(len(rows), len(schema))
    return FeatureMatrix(schema, X, np.array(labels, dtype=int), tuple(addrs))


# Column-mapping step for third-party exports (e.g. the authors' published
# dataset). Names are matched case-insensitively.
ADDRESS_COLUMNS = ("address", "contract_address", "token_address", "addr", "contract")
LABEL_COLUMNS = ("label", "violation", "violations", "is_violation", "securities_violation",
                 "sec_violation", "flag", "target", "class", "y")
MNEMONIC_ALIASES = {"PC": "GETPC", "KECCAK256": "SHA3", "PREVRANDAO": "DIFFICULTY", "SUICIDE": "SELFDESTRUCT"}


def map_columns(header: Sequence[str], mapping: Mapping[str, str] | None = None):
    """Work out (address column, label column, {source column: mnemonic}).

    ``mapping`` overrides detection: keys are source column names, values are
    ``"address"``, ``"label"``, a mnemonic, or ``""`` to drop the column.
    """
    mapping = dict(mapping or {})
    addr_col = label_col = None
    opcodes: dict[str, str] = {}
    for col in header:
        target = mapping.get(col)
        key = col.strip()
        if target is None:
            low = key.lower()
            up = key.upper()
            if addr_col is None and low in ADDRESS_COLUMNS:
                target = "address"
            elif label_col is None and low in LABEL_COLUMNS:
                target = "label"
            elif up in MNEMONICS:
                target = up
            elif up in MNEMONIC_ALIASES:
                target = MNEMONIC_ALIASES[up]
            else:
                target = ""
        if target == "address":
            addr_col = col
        elif target == "label":
            label_col = col
        elif target:
            opcodes[col] = target
    if label_col is None:
        raise MalformedInputError(f"no label column found among {list(header)[:8]}...")
    return addr_col, label_col, opcodes


def load_published(path: str | os.PathLike, mapping: Mapping[str, str] | None = None) -> FeatureMatrix:
    """Load a foreign feature export via :func:`map_columns`.

    Columns are re-ordered lexicographically by mnemonic so the result is
    directly comparable with matrices built by :func:`featurize`.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        addr_col, label_col, opcodes = map_columns(reader.fieldnames or [], mapping)
        names = sorted(set(opcodes.values()))
        pos = {n: i for i, n in enumerate(names)}
        addrs, labels, rows = [], [], []
        for i, row in enumerate(reader):
            vec = [0.0] * len(names)
            for col, name in opcodes.items():
                cell = (row.get(col) or "").strip()
                vec[pos[name]] += float(cell) if cell else 0.0
            rows.append(vec)
            labels.append(int(Label.parse(row[label_col])))
            addrs.append(row[addr_col].strip().lower() if addr_col else f"row{i}")
    unused = [n for n in names if not any(r[pos[n]] for r in rows)]
    if unused:
        log.info("columns never non-zero in %s: %s", path, ", ".join(unused))
    X = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return FeatureMatrix(FeatureSchema(tuple(names)), X, np.array(labels), tuple(addrs))
