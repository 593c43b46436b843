"""NPU-oriented optimizations for state-space model blocks.

The package rewrites the operators that serialize SSM inference on edge
NPUs into matrix-engine-friendly forms, verifies the rewrites against
bit-faithful reference kernels, and models the latency effect with a
calibrated analytical cost model.
"""

from .errors import (
    CorruptionError,
    CostError,
    FormatError,
    GraphError,
    NumericError,
    ParameterError,
    RewriteError,
    ShapeError,
    XambaError,
)
from .graph import Node, OpGraph, OpKind
from .models import (
    CENSUS_TARGETS,
    MambaConfig,
    SsmParams,
    build_mamba2_block,
    build_mamba_block,
    build_model,
    init_params,
    mamba2_config,
    mamba_config,
    pad_tokens,
)
from .npusim import (
    CostConfig,
    LatencyReport,
    NodeCost,
    cost_graph,
    cost_node,
    load_calibration,
    speedup,
    tokens_per_second,
)
from .passes import (
    EquivalenceReport,
    apply_actiba,
    apply_cumba,
    apply_passes,
    apply_reduba,
    check_equivalence,
    cumba_mask,
    cumba_mask_density,
    reduba_mask,
)
from .plu import PluTable, default_tables, fit_uniform, load_table, max_error, save_table
from .tensor import (
    AllcloseResult,
    Tensor,
    activation,
    allclose,
    cumsum_ref,
    load_tensor,
    matmul,
    reducesum_ref,
    save_tensor,
    vecmat,
)
from .zvc import ZvcTensor, compress, decompress, density

__version__ = "0.1.0"
