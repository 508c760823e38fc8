"""Hex parsing and linear disassembly of EVM runtime bytecode."""

from __future__ import annotations

import json
import string
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from .errors import MalformedInputError
from .opcodes import lookup

_HEXDIGITS = frozenset(string.hexdigits)


@dataclass(frozen=True, slots=True)
class Bytecode:
    code: bytes
    source_address: str | None = None

    def __len__(self) -> int:
        return len(self.code)

    @property
    def is_empty(self) -> bool:
        return not self.code

    def hex(self) -> str:
        return "0x" + self.code.hex()


@dataclass(frozen=True, slots=True)
class Instruction:
    offset: int
    opcode_byte: int
    mnemonic: str
    immediate: bytes = b""
    truncated: bool = False

    @property
    def size(self) -> int:
        return 1 + len(self.immediate)

    def to_bytes(self) -> bytes:
        return bytes([self.opcode_byte]) + self.immediate

    def to_record(self) -> dict:
        return {
            "offset": self.offset,
            "opcode": self.opcode_byte,
            "mnemonic": self.mnemonic,
            "immediate": self.immediate.hex() if self.immediate else None,
            "truncated": self.truncated,
        }


def parse_hex(text: str, source_address: str | None = None) -> Bytecode:
    """Decode ``0x``-prefixed or bare hex text.

    Raises MalformedInputError for odd length or a non-hex character; in the
    latter case ``index`` is the character position in the original text.
    """
    stripped = text.strip()
    lead = len(text) - len(text.lstrip())
    body = stripped
    if body[:2] in ("0x", "0X"):
        body = body[2:]
        lead += 2
    for i, ch in enumerate(body):
        if ch not in _HEXDIGITS:
            raise MalformedInputError(
                f"non-hex character {ch!r} at index {lead + i}", index=lead + i
            )
    if len(body) % 2:
        raise MalformedInputError(f"odd-length hex string ({len(body)} digits)")
    return Bytecode(bytes.fromhex(body), source_address)


def iter_instructions(code: bytes | Bytecode) -> Iterator[Instruction]:
    raw = code.code if isinstance(code, Bytecode) else bytes(code)
    n = len(raw)
    i = 0
    while i < n:
        octet = raw[i]
        name, width = lookup(octet)
        if width:
            end = i + 1 + width
            imm = raw[i + 1 : end]
            yield Instruction(i, octet, name, imm, truncated=end > n)
            i = end
        else:
            yield Instruction(i, octet, name)
            i += 1


def disassemble(code: bytes | Bytecode) -> list[Instruction]:
    """Decode the whole byte stream left to right. Never raises on content.

    A PUSH-N running past the end keeps whatever immediate octets remain and
    is flagged ``truncated``; the CBOR metadata tail is decoded like any other
    bytes.
    """
    return list(iter_instructions(code))


def reassemble(instructions: Iterable[Instruction]) -> bytes:
    return b"".join(ins.to_bytes() for ins in instructions)


def format_instruction(ins: Instruction) -> str:
    line = f"{ins.offset:04x} {ins.mnemonic}"
    if ins.immediate:
        line += f" 0x{ins.immediate.hex()}"
    if ins.truncated:
        line += " (truncated)"
    return line


def format_disassembly(instructions: Iterable[Instruction]) -> str:
    return "\n".join(format_instruction(ins) for ins in instructions)


def to_jsonl(instructions: Iterable[Instruction]) -> str:
    return "\n".join(json.dumps(ins.to_record()) for ins in instructions)
