"""Analytical latency model for an edge NPU: a MAC array (MPU), a vector
DSP, and a lookup unit in the MPU drain path.

Per-node cost laws:

* DSP CumSum over [m, n] steps m sequential cycles of an n-wide vector
  add (ceil(n / lanes) per step).  Rows wider than the DSP register
  file are processed in chunks, multiplying the SRAM traffic term.
* DSP ReduceSum costs the same m * ceil(n / lanes) accumulation.
* DSP activations cost a per-vector cycle count from the config table.
* MPU MatMul/VecMat/Conv1d cost MACs / (array width * utilization);
  when compute skip is enabled, a constant operand carrying a
  compressed sparse attachment scales the MAC count by its density and
  is read at its compressed size.
* A fused lookup activation costs nothing: the linear segments evaluate
  while results drain out of the array.  Unfused lookups pay a
  pipelined per-vector pass on the DSP.

Time per node is compute plus memory cycles at the engine's clock, and
nodes issue sequentially, so the graph total is the sum of node times.
All laws are monotone: raising any throughput parameter never makes a
node slower.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from importlib import resources

from .errors import CostError, NumericError, ParameterError
from .graph import Node, OpGraph, OpKind

DEFAULT_CALIBRATION = "lnl.json"

# Vector-op cycle weights for DSP kinds without a calibrated entry.
_DSP_OP_CYCLES = {
    OpKind.ADD: 1.0,
    OpKind.MULTIPLY: 1.0,
    OpKind.GATHER: 1.0,
    OpKind.POWER: 2.0,
    OpKind.SQRT: 2.0,
    OpKind.SOFTMAX: 4.0,
    OpKind.RMSNORM: 4.0,
}


@dataclass
class CostConfig:
    """Hardware parameters; the shipped values are calibrated once against
    the published end-to-end speedup ratios and reused everywhere."""

    mpu_macs_per_cycle: int
    mpu_freq_mhz: float
    dsp_lanes: int
    dsp_freq_mhz: float
    sram_bw_bytes_per_cycle: float
    dsp_regfile_bytes: int
    act_cycles_per_vector: dict = field(default_factory=dict)
    bytes_per_elem: int = 4
    mpu_utilization: float = 1.0
    drain_fusion: bool = True
    sparsity_skip: bool = True

    def validate(self) -> None:
        positive = (
            ("mpu_macs_per_cycle", self.mpu_macs_per_cycle),
            ("mpu_freq_mhz", self.mpu_freq_mhz),
            ("dsp_lanes", self.dsp_lanes),
            ("dsp_freq_mhz", self.dsp_freq_mhz),
            ("sram_bw_bytes_per_cycle", self.sram_bw_bytes_per_cycle),
            ("dsp_regfile_bytes", self.dsp_regfile_bytes),
            ("bytes_per_elem", self.bytes_per_elem),
        )
        for name, value in positive:
            if value <= 0:
                raise ParameterError(f"{name} must be positive, got {value}")
        if not 0 < self.mpu_utilization <= 1:
            raise ParameterError(f"mpu_utilization must be in (0, 1], got {self.mpu_utilization}")
        for kind, cyc in self.act_cycles_per_vector.items():
            if cyc <= 0:
                raise ParameterError(f"act_cycles_per_vector[{kind}] must be positive")

    def act_cycles(self, kind: str) -> float:
        try:
            return float(self.act_cycles_per_vector[kind])
        except KeyError:
            raise CostError(f"no activation cycle count for kind {kind!r}") from None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CostConfig":
        cfg = cls(**json.loads(text))
        cfg.validate()
        return cfg

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def load_calibration(path=None) -> CostConfig:
    """Load a calibration file; defaults to $XAMBA_CALIBRATION or the
    committed one shipped with the package."""
    if path is None:
        path = os.environ.get("XAMBA_CALIBRATION")
    if path is None:
        text = (resources.files("xamba") / "calibration" / DEFAULT_CALIBRATION).read_text()
        return CostConfig.from_json(text)
    with open(path) as f:
        return CostConfig.from_json(f.read())


@dataclass
class NodeCost:
    node_id: int
    kind: str
    engine: str
    compute_cycles: float
    memory_cycles: float
    time_us: float
    bytes_moved: int


@dataclass
class LatencyReport:
    graph: str
    config_hash: str
    passes: list
    nodes: list
    engine_totals_us: dict
    total_us: float
    breakdown: dict  # op kind -> share of total time

    def kind_time_us(self, kind: str) -> float:
        return sum(n.time_us for n in self.nodes if n.kind == kind)

    def to_dict(self) -> dict:
        nodes = []
        for n in self.nodes:
            d = asdict(n)
            d["id"] = d.pop("node_id")
            nodes.append({k: d[k] for k in ("id", "kind", "engine", "compute_cycles", "memory_cycles", "time_us", "bytes_moved")})
        return {
            "graph": self.graph,
            "config_hash": self.config_hash,
            "passes": self.passes,
            "total_us": self.total_us,
            "engine_totals_us": self.engine_totals_us,
            "breakdown": self.breakdown,
            "nodes": nodes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def csv_rows(self):
        yield "node_id,kind,engine,compute_cycles,memory_cycles,time_us,bytes_moved"
        for n in self.nodes:
            yield (
                f"{n.node_id},{n.kind},{n.engine},{n.compute_cycles:.6f},"
                f"{n.memory_cycles:.6f},{n.time_us:.9f},{n.bytes_moved}"
            )


_ACT_LABELS = {"silu": "SiLU", "softplus": "Softplus", "sigmoid": "Sigmoid", "exp": "Exp"}


def _kind_label(node: Node) -> str:
    """Report label; activations are split per function, matching how
    latency breakdowns are charted."""
    if node.kind is OpKind.ACTIVATION:
        return _ACT_LABELS[node.attrs["kind"]]
    return node.kind.value


def _elements(shape) -> int:
    return int(math.prod(shape))


def cost_node(graph: OpGraph, node: Node, shapes: dict, config: CostConfig) -> NodeCost:
    """Apply the engine law for one node; see the module docstring."""
    kind = node.kind
    bpe = config.bytes_per_elem
    lanes = config.dsp_lanes
    bw = config.sram_bw_bytes_per_cycle
    out_shape = shapes[node.id]
    out_elems = _elements(out_shape)
    in_shapes = [shapes[i] for i in node.inputs]
    engine = graph.engine_of(node)
    compute = 0.0
    mem_bytes = 0

    def dense_io_bytes():
        return sum(_elements(s) for s in in_shapes) * bpe + out_elems * bpe

    if kind in (OpKind.INPUT, OpKind.CONST):
        return NodeCost(node.id, _kind_label(node), "DSP", 0.0, 0.0, 0.0, 0)

    if kind is OpKind.CUMSUM:
        shp = in_shapes[0]
        m, n = (shp[0], 1) if len(shp) == 1 else shp
        compute = m * math.ceil(n / lanes)
        chunk_factor = max(1, math.ceil(n * bpe / config.dsp_regfile_bytes))
        mem_bytes = chunk_factor * 2 * m * n * bpe
    elif kind is OpKind.REDUCESUM:
        m, n = in_shapes[0]
        compute = m * math.ceil(n / lanes)
        mem_bytes = dense_io_bytes()
    elif kind is OpKind.ACTIVATION:
        compute = math.ceil(out_elems / lanes) * config.act_cycles(node.attrs["kind"])
        mem_bytes = dense_io_bytes()
    elif kind is OpKind.EXP:
        compute = math.ceil(out_elems / lanes) * config.act_cycles("exp")
        mem_bytes = dense_io_bytes()
    elif kind in (OpKind.MATMUL, OpKind.VECMAT, OpKind.CONV1D):
        if kind is OpKind.CONV1D:
            macs = out_elems * in_shapes[1][0]
        else:
            macs = in_shapes[0][0] * in_shapes[0][1] * in_shapes[1][1]
        compute = math.ceil(macs / (config.mpu_macs_per_cycle * config.mpu_utilization))
        mem_bytes = out_elems * bpe
        for iid, shp in zip(node.inputs, in_shapes):
            src = graph.node(iid)
            attachment = src.attrs.get("zvc") if src.kind is OpKind.CONST else None
            if attachment is not None and config.sparsity_skip:
                compute *= float(src.attrs.get("density", 1.0))
                mem_bytes += attachment.compressed_bytes
            else:
                mem_bytes += _elements(shp) * bpe
    elif kind is OpKind.PLU_ACTIVATION:
        if node.attrs.get("fused") and config.drain_fusion:
            return NodeCost(node.id, _kind_label(node), "PLU", 0.0, 0.0, 0.0, 0)
        engine = "DSP"
        compute = math.ceil(out_elems / lanes)
        mem_bytes = dense_io_bytes()
    elif kind is OpKind.RESHAPE:
        compute = 0.0
        mem_bytes = 0
    elif kind is OpKind.TRANSPOSE:
        compute = 0.0
        mem_bytes = dense_io_bytes()
    elif kind in _DSP_OP_CYCLES:
        compute = math.ceil(out_elems / lanes) * _DSP_OP_CYCLES[kind]
        mem_bytes = dense_io_bytes()
    else:
        raise CostError(f"no cost law for kind {kind.value}")

    mem_cycles = mem_bytes / bw
    freq = config.mpu_freq_mhz if engine in ("MPU", "PLU") else config.dsp_freq_mhz
    time_us = (compute + mem_cycles) / freq
    return NodeCost(node.id, _kind_label(node), engine, compute, mem_cycles, time_us, mem_bytes)


def cost_graph(graph: OpGraph, config: CostConfig, input_shapes=None) -> LatencyReport:
    """Cost every node in topological order under a sequential-issue model."""
    config.validate()
    shapes = graph.infer_shapes(input_shapes) if input_shapes else graph.shapes
    costs = []
    engine_totals: dict[str, float] = {}
    kind_times: dict[str, float] = {}
    for node in graph.nodes:
        if node.kind in (OpKind.INPUT, OpKind.CONST):
            continue
        nc = cost_node(graph, node, shapes, config)
        costs.append(nc)
        engine_totals[nc.engine] = engine_totals.get(nc.engine, 0.0) + nc.time_us
        kind_times[nc.kind] = kind_times.get(nc.kind, 0.0) + nc.time_us
    total = sum(engine_totals.values())
    breakdown = {k: t / total for k, t in sorted(kind_times.items())} if total > 0 else {}
    return LatencyReport(
        graph=graph.name,
        config_hash=config.config_hash(),
        passes=list(graph.metadata.get("passes", [])),
        nodes=costs,
        engine_totals_us=engine_totals,
        total_us=total,
        breakdown=breakdown,
    )


def speedup(report_base: LatencyReport, report_opt: LatencyReport) -> float:
    """Latency ratio of the baseline over the optimized run."""
    if report_base.total_us <= 0 or report_opt.total_us <= 0:
        raise NumericError("speedup requires positive totals")
    return report_base.total_us / report_opt.total_us


def tokens_per_second(decode_report: LatencyReport, tokens_per_step: float = 1.0) -> float:
    """Decode throughput implied by one decode-step latency."""
    if decode_report.total_us <= 0:
        raise NumericError("tokens/s requires a positive total")
    return tokens_per_step / (decode_report.total_us * 1e-6)
