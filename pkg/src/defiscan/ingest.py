"""Corpus assembly: token lists, overlap resolution and bytecode retrieval."""

from __future__ import annotations

import csv
import enum
import itertools
import json
import logging
import os
import re
import threading
import time
from collections import Counter
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import requests

from .bytecode import Bytecode, parse_hex
from .errors import FetchError, MalformedInputError

log = logging.getLogger(__name__)

ENDPOINT_ENV = "DEFISCAN_ENDPOINT"

_ADDRESS_RE = re.compile(r"^0x[0-9a-f]{40}$")


class Label(enum.IntEnum):
    LEGITIMATE = 0
    VIOLATION = 1

    @classmethod
    def parse(cls, value) -> Label:
        if isinstance(value, Label):
            return value
        text = str(value).strip().lower()
        if text in ("1", "1.0", "true", "violation", "violations"):
            return cls.VIOLATION
        if text in ("0", "0.0", "false", "legitimate", "legit"):
            return cls.LEGITIMATE
        raise MalformedInputError(f"unrecognised label {value!r}")

    def __str__(self) -> str:
        return self.name.lower()


class Provenance(str, enum.Enum):
    VIOLATION_LIST = "violation_list"
    LEGITIMATE_LIST = "legitimate_list"
    BOTH_LISTS = "both_lists"


_DEFAULT_PROVENANCE = {
    Label.VIOLATION: Provenance.VIOLATION_LIST,
    Label.LEGITIMATE: Provenance.LEGITIMATE_LIST,
}


def normalize_address(text: str) -> str:
    addr = str(text).strip().lower()
    if not addr.startswith("0x"):
        addr = "0x" + addr
    if not _ADDRESS_RE.match(addr):
        raise MalformedInputError(f"malformed address {text!r}")
    return addr


@dataclass(frozen=True)
class ContractRecord:
    address: str
    label: Label
    bytecode: Bytecode | None = None
    provenance: Provenance | None = None
    name: str | None = None

    def __post_init__(self):
        if self.provenance is None:
            object.__setattr__(self, "provenance", _DEFAULT_PROVENANCE[self.label])
        if self.provenance is Provenance.BOTH_LISTS and self.label is not Label.VIOLATION:
            raise ValueError("records found on both lists must be labeled violation")

    @property
    def is_empty(self) -> bool:
        """True when the code was fetched and turned out to be ``0x``."""
        return self.bytecode is not None and self.bytecode.is_empty


@dataclass(frozen=True)
class Corpus:
    records: tuple[ContractRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = Counter(r.address for r in self.records)
        dupes = [a for a, c in seen.items() if c > 1]
        if dupes:
            raise ValueError(f"duplicate addresses in corpus: {dupes[:3]}")

    @property
    def counts(self) -> dict[Label, int]:
        c = Counter(r.label for r in self.records)
        return {Label.VIOLATION: c[Label.VIOLATION], Label.LEGITIMATE: c[Label.LEGITIMATE]}

    @property
    def overlaps(self) -> int:
        return sum(r.provenance is Provenance.BOTH_LISTS for r in self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


# ---------------------------------------------------------------- token lists


def _rows_from_json(data) -> list[dict]:
    if isinstance(data, dict):
        # tokenlists.org layout: {"name": ..., "tokens": [...]}
        data = data.get("tokens", [])
    if not isinstance(data, list):
        raise MalformedInputError("JSON token list must be an array of objects")
    return data


def load_token_list(path: str | os.PathLike, label: Label | str) -> list[ContractRecord]:
    """Read a CSV (``address[,name]`` header) or JSON token list.

    Every row gets ``label``. Addresses are lower-cased. A malformed address
    raises MalformedInputError carrying the 1-based line (CSV) or entry
    number (JSON).
    """
    label = Label.parse(label)
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    if not text.strip():
        log.warning("token list %s is empty", path)
        return []

    records: list[ContractRecord] = []
    if text.lstrip()[:1] in "[{":
        for n, row in enumerate(_rows_from_json(json.loads(text)), start=1):
            if not isinstance(row, dict) or "address" not in row:
                raise MalformedInputError(f"{path}: entry {n} has no address", line=n)
            records.append(_make_record(row["address"], row.get("name"), label, path, n))
        return records

    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or "address" not in [f.strip().lower() for f in reader.fieldnames]:
        raise MalformedInputError(f"{path}: CSV header must contain 'address'", line=1)
    for row in reader:
        row = {k.strip().lower(): v for k, v in row.items() if k is not None}
        # header is line 1
        records.append(_make_record(row["address"], row.get("name"), label, path, reader.line_num))
    return records


def _make_record(address, name, label, path, line) -> ContractRecord:
    try:
        addr = normalize_address(address)
    except MalformedInputError as exc:
        raise MalformedInputError(f"{path}: line {line}: {exc}", line=line) from None
    return ContractRecord(addr, label, name=(name or None))


def merge_lists(
    violations: Iterable[ContractRecord], legitimate: Iterable[ContractRecord]
) -> Corpus:
    """Union two record lists; an address seen with both labels becomes a violation.

    Works on already-merged corpora too, so merging a result with either of
    its inputs again is a no-op.
    """
    merged: dict[str, ContractRecord] = {}
    sources: dict[str, set[Provenance]] = {}
    for rec in itertools.chain(violations, legitimate):
        prov = {rec.provenance}
        if rec.provenance is Provenance.BOTH_LISTS:
            prov = {Provenance.VIOLATION_LIST, Provenance.LEGITIMATE_LIST}
        if rec.address not in merged:
            merged[rec.address] = rec
            sources[rec.address] = set(prov)
            continue
        have = merged[rec.address]
        sources[rec.address] |= prov
        label = max(have.label, rec.label)
        merged[rec.address] = replace(
            have,
            label=label,
            provenance=_DEFAULT_PROVENANCE[label],
            bytecode=have.bytecode if have.bytecode is not None else rec.bytecode,
            name=have.name or rec.name,
        )

    out = []
    for addr, rec in merged.items():
        if len(sources[addr]) > 1:
            rec = replace(rec, label=Label.VIOLATION, provenance=Provenance.BOTH_LISTS)
        out.append(rec)
    return Corpus(tuple(out))


# ------------------------------------------------------------------ JSON-RPC


class JsonRpcError(Exception):
    pass


class TransportError(Exception):
    pass


class JsonRpcClient:
    """Minimal thread-safe Ethereum JSON-RPC client over HTTP POST."""

    def __init__(self, endpoint: str, session: requests.Session | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.session = session or requests.Session()
        self.timeout = timeout
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self.calls = 0

    def _next_id(self) -> int:
        with self._lock:
            self.calls += 1
            return next(self._ids)

    def request_body(self, method: str, params: list) -> dict:
        return {"jsonrpc": "2.0", "method": method, "params": params, "id": self._next_id()}

    def call(self, method: str, params: list):
        body = self.request_body(method, params)
        try:
            resp = self.session.post(
                self.endpoint,
                data=json.dumps(body),
                headers={"Content-Type": "application/json"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code}")
        try:
            payload = resp.json()
        except ValueError:
            raise JsonRpcError(f"non-JSON response (HTTP {resp.status_code})") from None
        if not isinstance(payload, dict):
            raise JsonRpcError("response is not a JSON object")
        if payload.get("error") is not None:
            err = payload["error"]
            msg = err.get("message", err) if isinstance(err, dict) else err
            raise JsonRpcError(f"RPC error: {msg}")
        if "result" not in payload:
            raise JsonRpcError("response has no result")
        return payload["result"]

    def get_code(self, address: str, block: str = "latest") -> str:
        result = self.call("eth_getCode", [address, block])
        if not isinstance(result, str):
            raise JsonRpcError(f"eth_getCode returned {type(result).__name__}")
        return result


# --------------------------------------------------------------------- cache


class BytecodeCache:
    """One file per address holding the raw hex string. Writes are atomic."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)

    def path(self, address: str) -> Path:
        return self.directory / f"{address}.hex"

    def get(self, address: str) -> str | None:
        p = self.path(address)
        return p.read_text().strip() if p.exists() else None

    def put(self, address: str, hex_code: str) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        target = self.path(address)
        tmp = target.with_suffix(f".tmp{threading.get_ident()}")
        tmp.write_text(hex_code)
        os.replace(tmp, target)


@dataclass
class FetchReport:
    corpus: Corpus
    errors: list[FetchError] = field(default_factory=list)
    network_calls: int = 0
    cache_hits: int = 0

    @property
    def empty(self) -> list[str]:
        return [r.address for r in self.corpus if r.is_empty]


def _fetch_one(client: JsonRpcClient, address: str, retries: int, backoff: float) -> str:
    attempt = 0
    while True:
        try:
            return client.get_code(address)
        except TransportError as exc:
            if attempt >= retries:
                raise FetchError(address, f"transport failure after {retries} retries: {exc}") from exc
            time.sleep(backoff * 2**attempt)
            attempt += 1
        except JsonRpcError as exc:
            raise FetchError(address, str(exc)) from exc


def fetch_bytecode(
    corpus: Corpus,
    endpoint: str | None,
    cache_dir: str | os.PathLike,
    *,
    workers: int = 4,
    retries: int = 3,
    backoff: float = 0.5,
    client: JsonRpcClient | None = None,
) -> FetchReport:
    """Populate every record's bytecode from the cache or ``eth_getCode``.

    Failures are collected per address; the affected records keep
    ``bytecode=None`` and the run continues.
    """
    cache = BytecodeCache(cache_dir)
    report = FetchReport(corpus)
    resolved: dict[str, str] = {}
    missing = []
    for rec in corpus:
        hit = cache.get(rec.address)
        if hit is not None:
            resolved[rec.address] = hit
            report.cache_hits += 1
        else:
            missing.append(rec.address)

    if missing:
        if client is None:
            endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
            if not endpoint:
                raise FetchError(missing[0], f"no endpoint configured (set {ENDPOINT_ENV})")
            client = JsonRpcClient(endpoint)
        calls_before = client.calls

        def task(address):
            code = _fetch_one(client, address, retries, backoff)
            parse_hex(code)  # reject garbage before it reaches the cache
            cache.put(address, code)
            return code

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            futures = {addr: pool.submit(task, addr) for addr in missing}
        for addr, fut in futures.items():
            exc = fut.exception()
            if exc is None:
                resolved[addr] = fut.result()
            elif isinstance(exc, FetchError):
                report.errors.append(exc)
            elif isinstance(exc, MalformedInputError):
                report.errors.append(FetchError(addr, f"malformed bytecode: {exc}"))
            else:
                raise exc
        report.network_calls = client.calls - calls_before

    records = []
    for rec in corpus:
        code = resolved.get(rec.address)
        if code is not None:
            rec = replace(rec, bytecode=parse_hex(code, rec.address))
        records.append(rec)
    report.corpus = Corpus(tuple(records))
    return report


# --------------------------------------------------------------- persistence

CORPUS_FIELDS = ("address", "label", "provenance", "name", "bytecode")


def save_corpus(corpus: Corpus, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CORPUS_FIELDS)
        for r in corpus:
            w.writerow([
                r.address,
                int(r.label),
                r.provenance.value,
                r.name or "",
                "" if r.bytecode is None else r.bytecode.hex(),
            ])


def load_corpus(path: str | os.PathLike) -> Corpus:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            code = row.get("bytecode") or ""
            records.append(ContractRecord(
                normalize_address(row["address"]),
                Label.parse(row["label"]),
                bytecode=parse_hex(code, row["address"]) if code else None,
                provenance=Provenance(row["provenance"]),
                name=row.get("name") or None,
            ))
    return Corpus(tuple(records))


def summarize(corpus: Corpus, errors: Sequence[FetchError] = ()) -> str:
    c = corpus.counts
    line = (f"{len(corpus)} contracts ({c[Label.VIOLATION]} violations, "
            f"{corpus.overlaps} overlaps relabeled)")
    if errors:
        line += f"; {len(errors)} fetch failures"
    return line
