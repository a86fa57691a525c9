from .driver import IncompleteResultsError, RawResults, read_raw, run_all_seeds, write_raw
from .outputs import (
    BLOCKS,
    Candidate,
    PredictionSet,
    known_from_network,
    rank_candidates,
    read_predictions,
    symmetrize_outputs,
    write_predictions,
)
from .program import ALGORITHMS, AlgoParams, DHLPProgram, ProtocolError
