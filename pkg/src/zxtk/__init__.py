"""Token-machine evaluation of ZX diagrams, checked against dense matrices."""

from .diagram import (
    Angle,
    ComponentMap,
    Cycle,
    Diagram,
    Dir,
    GenKind,
    Generator,
    Path,
    bend_wire,
    canonical_relabel,
    compose,
    conjugate,
    connect_components,
    connected_components,
    cpm_construct,
    cycle_basis,
    distance,
    empty_diagram,
    enumerate_cycles,
    enumerate_paths,
    identity_wire,
    make_generator,
    paths_between,
    red_spider,
    rename_edges,
    swap_wires,
    tensor,
)
from .errors import (
    ArityError,
    CompositionError,
    DiagramError,
    DslSyntaxError,
    FormatError,
    FuseExceeded,
    GroundNotAllowed,
    NormalFormReached,
    NotCycleBalanced,
    NotWellFormed,
    PathLimitExceeded,
    ZxError,
)
from .ground import (
    GroundToken,
    GroundTokenState,
    SimulatedStep,
    SimulationReport,
    check_simulation,
    cpm_map,
    g_collide_all,
    g_diffuse_once,
    g_extract_superoperator,
    g_normalize,
    g_step,
)
from .interp import apply, interp, interp_cpm
from .machine import (
    GROUND_RULES,
    PURE_RULES,
    CheckResult,
    Token,
    TokenState,
    Trace,
    TraceStep,
    collide_all,
    diffuse_once,
    extract_matrix,
    extract_matrix_general,
    extract_state,
    is_cycle_balanced,
    is_well_formed,
    make_strategy,
    normalize,
    polarity,
    read_terms,
    rewind_witness,
    run_multi_token,
    run_single_token,
    scripted_strategy,
    step,
    term_key,
)
from .textio import (
    doc_to_diagram,
    doc_to_state,
    diagram_to_doc,
    load_diagram_text,
    parse_diagram,
    parse_dsl,
    parse_matrix,
    parse_state,
    parse_trace,
    serialize_diagram,
    serialize_matrix,
    serialize_state,
    serialize_trace,
    state_to_doc,
)
from .verify import (
    SUITES,
    GenConfig,
    SuiteReport,
    TrialResult,
    check_diagram,
    random_diagram,
    run_suite,
    run_trial,
    suite_confluence,
    suite_invariants,
    suite_oracle,
    suite_simulation,
)

__version__ = "0.1.0"
