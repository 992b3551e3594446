"""Finite-fragment workbench for decomposing grid functions into a
hereditarily thrifty core plus width-harmless relabelings, and synthesizing
the core as a certified term over one witness function and named atoms."""

from .core import (
    App,
    AtomBinding,
    IndexSet,
    MTuple,
    PartialFn,
    Point,
    Proj,
    Term,
    bar_extend,
    compose,
    disjoint_union,
    eval_partial,
    eval_term,
    fiber,
    full_index,
    hash_fn,
    shrink_inner,
    star_fn,
    star_set,
)
from .analysis import (
    ci_fragment_check,
    classify_preimages,
    is_hereditarily_thrifty,
    k_table,
    least_bound,
    tuple_set_width,
    width,
)
from .decompose import (
    countable_selection,
    hereditary_decompose,
    strong_decompose,
    verify_decomposition,
)
from .synth import (
    assemble_term,
    build_Q,
    build_h,
    complete_width1,
    end_to_end_synthesize,
    main_lemma_certify,
    normalize_f,
    oplus,
    pstar,
    reduce_to_unary,
    verify_Q_in_CI,
    verify_main_lemma,
)
from .instances import Instance, check_admissibility, generate_instance
from .pipeline import run_pipeline

__all__ = [name for name in dir() if not name.startswith("_")]
