"""Opcode-frequency triage of ERC-20 token contracts for securities violations."""

from .bytecode import Bytecode, Instruction, disassemble, parse_hex
from .evaluation import (ExperimentConfig, Family, explore, ladder, run_experiment, split,
                         undersample, weighted_metrics)
from .features import (FeatureMatrix, FeatureSchema, build_schema, count_opcodes, featurize,
                       fit_standardization, load_matrix, load_published, save_matrix, vectorize)
from .ingest import ContractRecord, Corpus, Label, fetch_bytecode, load_token_list, merge_lists
from .stats import class_similarity, cohens_d, cosine, opcode_mean_table, welch_t_test

__version__ = "0.1.0"
