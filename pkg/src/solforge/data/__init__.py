"""Dataset construction for the three training stages."""

from .builders import (
    CI,
    PSM,
    SPM,
    TI,
    TI_PROMPT,
    VD,
    VD_PROMPT,
    DatasetSplit,
    InfillExample,
    InstructionExample,
    TrainingRecord,
    build_ci_dataset,
    build_ti_dataset,
    build_vd_dataset,
    infill_examples,
    render_infill,
    split_811,
    split_five_segments,
    tag_block,
    ti_input,
)
from .corpus import extract_instruction, filter_single_contract, instruction_examples, load_corpus, load_labels

__all__ = [
    "CI",
    "PSM",
    "SPM",
    "TI",
    "TI_PROMPT",
    "VD",
    "VD_PROMPT",
    "DatasetSplit",
    "InfillExample",
    "InstructionExample",
    "TrainingRecord",
    "build_ci_dataset",
    "build_ti_dataset",
    "build_vd_dataset",
    "extract_instruction",
    "filter_single_contract",
    "infill_examples",
    "instruction_examples",
    "load_corpus",
    "load_labels",
    "render_infill",
    "split_811",
    "split_five_segments",
    "tag_block",
    "ti_input",
]
