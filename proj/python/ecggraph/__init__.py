"""Python bindings for the ecggraph C++ core."""
import json as _json

from . import _core
from ._core import (
    StageError,
    WfdbError,
    decode_format212,
    design_fir_bandpass,
    encode_format212,
    feature_names,
    filter_signal,
    load_record,
    map_symbol,
    pan_tompkins,
    parse_header,
    pearson_matrix,
    read_annotations,
    remove_baseline,
    write_synthetic_database,
)

__version__ = "0.1.0"


def run_stage(stage, **config):
    """Run a pipeline stage; keyword arguments use the --config JSON keys."""
    _core.run_stage(stage, _json.dumps(config))
