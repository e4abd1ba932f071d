from asymcap.sparse.bp import bp_decode_biased, task_equivalence_check, task_messages, belief_propagation
from asymcap.sparse.decimation import bp_decimate_encode, DecimationResult
from asymcap.sparse.graph import SparseGraph, build_graph, build_regular_graph, select_checks, syndrome, to_dense, \
    gf2_solve
from asymcap.sparse.integrated import IntegratedCode, IntegratedOutcome, build_integrated_code, integrated_encode, \
    integrated_decode, run_integrated
