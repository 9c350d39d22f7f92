"""Local symbolic explanations for binary classifiers over binary features.

Pipeline: sample a labeled vicinity of the instance, train a random-forest
surrogate, compile it to CNF with a distinguished output literal, pose a
Partial Max-SAT problem (hard = circuit + asserted target class, soft = the
instance literals), then enumerate counterfactuals as Minimal Correction
Subsets and sufficient reasons as Minimal Unsatisfiable Subsets via
hitting-set duality.
"""

from .core import (
    Clause,
    CnfFormula,
    Explanation,
    ExplanationProblem,
    Instance,
    Literal,
    VarMap,
    emit_dimacs,
    emit_wcnf,
    hamming,
    parse_dimacs,
)
from .encoding import (
    AlreadyClassifiedError,
    ForestEncoding,
    build_problem,
    encode_cardinality,
    encode_forest,
    encode_tree,
)
from .enumeration import (
    IncompleteMcsError,
    McsResult,
    MusResult,
    TargetUnreachableError,
    brute_force_explanations,
    enumerate_mcs,
    enumerate_mus_by_dualization,
    minimal_hitting_sets,
    verify_counterfactual,
    verify_sufficient_reason,
)
from .forest import (
    DecisionTree,
    Leaf,
    Node,
    RandomForest,
    fidelity,
    forest_from_json,
    forest_to_json,
    predict_forest,
    predict_tree,
    train_forest,
    train_tree,
)
from .oracles import (
    ExternalProcessOracle,
    Oracle,
    OracleError,
    OracleSpec,
    ThresholdOracle,
    TruthTableOracle,
    protocol_vectors,
)
from .pipeline import ExplanationReport, FidelityError, RunConfig, run_explain
from .solver import (
    SolveResult,
    SolverBudgetExceeded,
    SolverSession,
    model_true,
    solve_external,
)
from .vicinity import (
    LabeledDataset,
    VicinityTooSmallError,
    default_radius,
    filter_dataset_vicinity,
    sample_vicinity,
)

__version__ = "0.1.0"
