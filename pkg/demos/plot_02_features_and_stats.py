"""
From contracts to a feature matrix
==================================

Build a tiny labelled corpus by hand, vectorize it against a shared
opcode schema, and compare the two classes.
"""

import numpy as np

from defiscan import ContractRecord, Corpus, Label, featurize
from defiscan.stats import class_similarity, format_mean_table, opcode_mean_table

rng = np.random.default_rng(7)

# random straight-line programs; violations lean on CALLVALUE (0x34)
def program(p_callvalue):
    ops = rng.choice([0x01, 0x02, 0x10, 0x34, 0x35, 0x36, 0x50], size=60,
                     p=[0.2, 0.15, 0.15, p_callvalue, 0.15, 0.1, 0.25 - p_callvalue])
    return bytes(ops.tolist())

records = [ContractRecord("0x" + f"{i:040x}", Label.VIOLATION, program(0.2)) for i in range(12)]
records += [ContractRecord("0x" + f"{i + 100:040x}", Label.LEGITIMATE, program(0.02)) for i in range(40)]
matrix = featurize(Corpus(tuple(records)))
print(matrix.n_rows, "contracts x", len(matrix.schema), "opcodes:", ", ".join(matrix.columns))

###############################################################################
# Per-opcode mean comparison, violations first

table = opcode_mean_table(matrix, ["CALLVALUE", "CALLDATASIZE", "ADD"])
print(format_mean_table(table))

###############################################################################
# Cosine similarity within and across classes

print(class_similarity(matrix).to_dict()["comparisons"]["violation_vs_inter"])
