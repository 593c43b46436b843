"""Graph rewrites that move sequential DSP work onto the matrix engine.

Three transformations:

* cumba: every CumSum becomes a matrix product with a precomputed
  lower-triangular 0/1 mask, so the prefix sum runs on the MAC array
  instead of stepping row by row on the DSP.  The mask constant carries
  a compressed form and its density for the cost model.
* reduba: every ReduceSum becomes a vector-matrix product with an
  all-ones row mask; one mask constant is shared per distinct length.
* actiba: SiLU/Softplus activations become table-driven piecewise-linear
  evaluations, fused into the producer's drain phase when the producer
  runs on the matrix engine.

Passes are pure: they return a new graph and never mutate the input.
`check_equivalence` certifies a rewrite by executing both graphs on
seeded random inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import zvc as zvc_mod
from .errors import ParameterError, RewriteError, ShapeError
from .graph import OpGraph, OpKind
from .plu import PluTable
from .tensor import Tensor

log = logging.getLogger(__name__)

REWRITABLE_ACTIVATIONS = ("silu", "softplus")


@lru_cache(maxsize=None)
def cumba_mask(m: int) -> Tensor:
    """Lower-triangular ones mask (including the diagonal): 1 where col <= row.

    Cached per size; multiplying by it replays the exact float32 addition
    sequence of the sequential prefix sum.
    """
    if m < 1:
        raise ParameterError(f"mask size must be >= 1, got {m}")
    return Tensor(np.tril(np.ones((m, m), dtype=np.float32)))


@lru_cache(maxsize=None)
def reduba_mask(m: int) -> Tensor:
    """All-ones row vector [1, m]; shared across every reduction of length m."""
    if m < 1:
        raise ParameterError(f"mask size must be >= 1, got {m}")
    return Tensor(np.ones((1, m), dtype=np.float32))


def cumba_mask_density(m: int) -> float:
    """Nonzero fraction of the lower-triangular mask: (m+1)/(2m)."""
    return (m + 1) / (2 * m)


def _fresh(g: OpGraph, pass_name: str) -> OpGraph:
    ng = OpGraph(g.name)
    ng.metadata = dict(g.metadata)
    ng.metadata["passes"] = list(g.metadata.get("passes", [])) + [pass_name]
    ng.tables = dict(g.tables)
    return ng


def _copy_node(ng: OpGraph, node, remap: dict) -> int:
    return ng.add_node(node.kind, [remap[i] for i in node.inputs], **node.attrs)


def _finish(ng: OpGraph, g: OpGraph, remap: dict) -> OpGraph:
    ng.graph_outputs = [remap[o] for o in g.graph_outputs]
    return ng


def apply_cumba(g: OpGraph) -> OpGraph:
    """Replace each CumSum with {Const(mask), MatMul(mask, input)}.

    A rank-1 CumSum of length n is handled through its [n, 1] column
    form.  Each site gets its own mask constant, tagged with a
    compressed attachment and its density so the cost model can apply
    storage and compute-skip accounting.
    """
    shapes = g.shapes
    ng = _fresh(g, "cumba")
    remap: dict = {}
    for node in g.nodes:
        if node.kind is not OpKind.CUMSUM:
            remap[node.id] = _copy_node(ng, node, remap)
            continue
        if node.attrs.get("axis", 0) != 0:
            raise RewriteError(f"node {node.id}: cumba supports axis-0 CumSum only")
        shape = shapes[node.id]
        src = remap[node.inputs[0]]
        one_d = len(shape) == 1
        if one_d:
            m = shape[0]
            src = ng.add_node(OpKind.RESHAPE, [src], shape=(m, 1))
        else:
            m = shape[0]
        mask = cumba_mask(m)
        mask_id = ng.const(
            mask,
            zvc=zvc_mod.compress(mask),
            density=cumba_mask_density(m),
            mask="cumba",
        )
        out = ng.add_node(OpKind.MATMUL, [mask_id, src])
        if one_d:
            out = ng.add_node(OpKind.RESHAPE, [out], shape=(m,))
        remap[node.id] = out
    return _finish(ng, g, remap)


def apply_reduba(g: OpGraph) -> OpGraph:
    """Replace each ReduceSum with a VecMat against a shared ones mask.

    One mask constant is created per distinct reduction length and
    reused by every site of that length.
    """
    shapes = g.shapes
    ng = _fresh(g, "reduba")
    remap: dict = {}
    mask_ids: dict[int, int] = {}
    for node in g.nodes:
        if node.kind is not OpKind.REDUCESUM:
            remap[node.id] = _copy_node(ng, node, remap)
            continue
        if node.attrs.get("axis", 0) != 0:
            raise RewriteError(f"node {node.id}: reduba supports axis-0 ReduceSum only")
        in_shape = shapes[node.inputs[0]]
        if len(in_shape) != 2:
            raise RewriteError(f"node {node.id}: reduba expects a rank-2 input, got {in_shape}")
        m = in_shape[0]
        if m not in mask_ids:
            mask_ids[m] = ng.const(reduba_mask(m), mask="reduba")
        remap[node.id] = ng.add_node(OpKind.VECMAT, [mask_ids[m], remap[node.inputs[0]]])
    return _finish(ng, g, remap)


def apply_actiba(g: OpGraph, tables: dict, kinds=None) -> OpGraph:
    """Swap SiLU/Softplus activations for table-driven linear segments.

    `tables` maps an activation name to its PluTable.  `kinds` restricts
    the rewrite to a subset of activation names (both by default), which
    is how per-function latency contributions are measured.  A node is
    fused into the drain phase only when its producer runs on the MPU;
    DSP-produced activations keep a standalone lookup and are reported.
    """
    if kinds is None:
        kinds = set(REWRITABLE_ACTIVATIONS)
    else:
        kinds = set(kinds)
        unknown = kinds - set(REWRITABLE_ACTIVATIONS)
        if unknown:
            raise ParameterError(f"cannot rewrite activation kinds {sorted(unknown)}")
    ng = _fresh(g, "actiba")
    remap: dict = {}
    unfused: list[int] = []
    for node in g.nodes:
        akind = node.attrs.get("kind")
        if node.kind is not OpKind.ACTIVATION or akind not in kinds:
            remap[node.id] = _copy_node(ng, node, remap)
            continue
        table = tables.get(akind)
        if table is None:
            raise ParameterError(f"no table provided for activation kind {akind!r}")
        if not isinstance(table, PluTable) or table.func != akind:
            raise ParameterError(f"table for {akind!r} fits {getattr(table, 'func', None)!r}")
        producer = ng.nodes[remap[node.inputs[0]]]
        fused = ng.engine_of(producer) == "MPU"
        if not fused:
            unfused.append(node.id)
            log.warning(
                "activation node %d (%s) follows a %s producer; lookup stays unfused",
                node.id,
                akind,
                producer.kind.value,
            )
        ng.tables[akind] = table
        remap[node.id] = ng.add_node(
            OpKind.PLU_ACTIVATION, [remap[node.inputs[0]]], table=akind, fused=fused
        )
    if unfused:
        ng.metadata["actiba_unfused"] = unfused
    return _finish(ng, g, remap)


PASSES = {
    "cumba": apply_cumba,
    "reduba": apply_reduba,
}


def apply_passes(g: OpGraph, names, tables=None) -> OpGraph:
    """Apply a comma-style list of pass names in order.

    `actiba` may be restricted as `actiba:silu` or `actiba:softplus`.
    """
    for name in names:
        name = name.strip()
        if not name:
            continue
        if name in PASSES:
            g = PASSES[name](g)
        elif name == "actiba" or name.startswith("actiba:"):
            kinds = None if name == "actiba" else [name.split(":", 1)[1]]
            if tables is None:
                raise ParameterError("actiba requires activation tables")
            g = apply_actiba(g, tables, kinds=kinds)
        else:
            raise ParameterError(f"unknown pass {name!r}")
    return g


@dataclass
class EquivalenceReport:
    """Worst-case difference between two graphs over sampled inputs."""

    passed: bool
    max_abs_diff: float
    worst_output: int
    worst_index: tuple
    samples: int
    rtol: float
    atol: float

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_abs_diff": self.max_abs_diff,
            "worst_output": self.worst_output,
            "worst_index": list(self.worst_index),
            "samples": self.samples,
            "rtol": self.rtol,
            "atol": self.atol,
        }


def check_equivalence(
    g1: OpGraph,
    g2: OpGraph,
    n_samples: int = 20,
    input_range=(-1.0, 1.0),
    rtol: float = 1e-5,
    atol: float = 1e-4,
    seed: int = 0,
    integers: bool = False,
) -> EquivalenceReport:
    """Execute both graphs on the same seeded random inputs and compare.

    Inputs are uniform over `input_range` (or integer-valued with
    `integers=True`, handy for exactness checks).  Deterministic for a
    given seed.
    """
    s1 = [g1.shapes[i] for i in g1.graph_inputs]
    s2 = [g2.shapes[i] for i in g2.graph_inputs]
    if s1 != s2 or len(g1.graph_outputs) != len(g2.graph_outputs):
        raise ShapeError("graphs have different input/output signatures")
    rng = np.random.default_rng(seed)
    lo, hi = input_range
    passed = True
    worst = (0.0, 0, (0,))
    for _ in range(n_samples):
        feed = []
        for shp in s1:
            if integers:
                vals = rng.integers(int(lo), int(hi) + 1, size=shp).astype(np.float32)
            else:
                vals = rng.uniform(lo, hi, size=shp).astype(np.float32)
            feed.append(Tensor(vals))
        out1 = g1.execute(feed)
        out2 = g2.execute(feed)
        for k, (a, b) in enumerate(zip(out1, out2)):
            if a.shape != b.shape:
                raise ShapeError(f"output {k} shapes differ: {a.shape} vs {b.shape}")
            av = a.array.astype(np.float64)
            bv = b.array.astype(np.float64)
            diff = np.abs(av - bv)
            if not np.all(diff <= atol + rtol * np.abs(bv)):
                passed = False
            if diff.size:
                idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
                if float(diff[idx]) > worst[0]:
                    worst = (float(diff[idx]), k, tuple(int(i) for i in idx))
    return EquivalenceReport(
        passed=passed,
        max_abs_diff=worst[0],
        worst_output=worst[1],
        worst_index=worst[2],
        samples=n_samples,
        rtol=rtol,
        atol=atol,
    )
