"""Exact inference and training losses for logically constrained classifiers.

The package compiles label constraints (propositional formulas or HEX
graphs of hierarchy and exclusion edges) into junction trees, then answers
probability, marginal, and most-likely-state queries over the exponential
family defined by raw classifier activations.  On top of the query layer
sit the training losses (plain BCE, constraint-regularized, and fully
conditioned), a toy end-to-end study, and power-law fits of accuracy
against training set size.
"""

from .compiler import (
    CompiledKnowledge,
    compile_hex,
    knowledge_kind,
    load_knowledge,
    save_knowledge,
)
from .data import (
    Dataset,
    join_dataset,
    read_activations_csv,
    read_labels_csv,
    read_points_csv,
    validate_labels,
    write_csv,
    write_json,
)
from .distribution import (
    DenseDistribution,
    conditioned_distribution_bruteforce,
    dense_from_activations,
    formula_probability_bruteforce,
    log_formula_probability_bruteforce,
    log_partition_function,
    log_probability,
    marginals_bruteforce,
    mode_bruteforce,
    partition_function,
    probability,
    semantic_project,
)
from .errors import (
    DivergenceError,
    EnumerationCapError,
    FitInputError,
    FormulaParseError,
    GraphCycleError,
    HexFormatError,
    InconsistentLabelError,
    InputError,
    NullDistributionError,
    NumericError,
    SemcondError,
    TreewidthCapError,
    UnattainableAccuracyError,
    UnsatisfiableKnowledgeError,
)
from .hexgraph import (
    HexGraph,
    densify_hierarchy,
    derive_exclusions,
    expanded_exclusions,
    hex_from_dict,
    hex_to_formula,
    ingest_hex,
    prune_pass_through,
    reduced_exclusions,
    sparsify_hierarchy,
)
from .inference import (
    InferenceResult,
    Knowledge,
    infer,
    knowledge_entails,
    knowledge_k,
    knowledge_log_pqe,
    knowledge_log_pqe_batch,
    knowledge_marginals,
    knowledge_marginals_batch,
    map_state,
    marginals_batch,
    pqe,
    pqe_batch,
    predict_imc,
    predict_sci,
)
from .logic import (
    FALSE,
    TRUE,
    And,
    Const,
    Formula,
    Not,
    Or,
    Signature,
    Var,
    conj,
    disj,
    entails,
    exactly_one,
    format_formula,
    one_hot,
    parse_formula,
    tautology,
)
from .losses import (
    LossValue,
    log_knowledge_probability,
    loss_categorical,
    loss_imc,
    loss_imc_batch,
    loss_sc,
    loss_sc_batch,
    loss_sr,
    loss_sr_batch,
)
from .scaling import (
    AccuracyPoint,
    FitReport,
    SurrogateModel,
    asymptotic_gain,
    fit_report,
    fit_surrogate,
    resource_savings,
    savings_curve,
)
from .training import (
    ToyConfig,
    ToyDataset,
    ToyModel,
    TrainResult,
    consistency_rate,
    evaluate_decoders,
    exact_accuracy,
    generate_toy_dataset,
    run_toy_study,
    train_toy_model,
)

__version__ = "0.1.0"
