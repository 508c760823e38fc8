"""
Reading EVM bytecode
====================

Decode a short runtime bytecode, look at a truncated PUSH at the end,
and turn the instruction stream into opcode counts.
"""

from defiscan import count_opcodes, disassemble, parse_hex
from defiscan.bytecode import format_disassembly, reassemble

# the usual Solidity preamble, plus a PUSH2 cut short by the end of code
code = parse_hex("0x6080604052348015600f57600080fd5b50611f")
ins = disassemble(code)
print(format_disassembly(ins))

# decoding is lossless, even with the dangling immediate
assert reassemble(ins) == code.code
print("last instruction truncated:", ins[-1].truncated)

counts = count_opcodes(ins)
for name, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
    print(f"{name:<12}{n}")
