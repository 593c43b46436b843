"""Minimal static-shape operator graph: construction, shape inference,
reference execution, census, and JSON serialization.

Nodes reference earlier nodes only, so the node list is already a
topological order and graphs are acyclic by construction.  The executor
delegates numeric semantics to the reference kernels in `tensor`, which
keeps it usable as an equivalence oracle for the rewrite passes.  Engine
placement (MPU matrix array vs DSP vector unit) is an attribute-level
concern: matrix-shaped work defaults to the MPU, everything else to the
DSP, and a fused lookup-table activation rides the MPU drain path.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import plu as plu_mod
from . import zvc as zvc_mod
from .errors import GraphError, NumericError, ShapeError
from .tensor import ACTIVATION_KINDS, Tensor, activation, cumsum_ref, matmul, reducesum_ref, vecmat


class OpKind(str, Enum):
    INPUT = "Input"
    CONST = "Const"
    MATMUL = "MatMul"
    VECMAT = "VecMat"
    ADD = "Add"
    MULTIPLY = "Multiply"
    CUMSUM = "CumSum"
    REDUCESUM = "ReduceSum"
    ACTIVATION = "Activation"
    PLU_ACTIVATION = "PluActivation"
    GATHER = "Gather"
    POWER = "Power"
    SQRT = "Sqrt"
    EXP = "Exp"
    TRANSPOSE = "Transpose"
    RESHAPE = "Reshape"
    RMSNORM = "RMSNorm"
    CONV1D = "Conv1d"
    SOFTMAX = "Softmax"


# Required input count per kind (min, max).
_ARITY = {
    OpKind.INPUT: (0, 0),
    OpKind.CONST: (0, 0),
    OpKind.MATMUL: (2, 2),
    OpKind.VECMAT: (2, 2),
    OpKind.ADD: (2, 2),
    OpKind.MULTIPLY: (2, 2),
    OpKind.CUMSUM: (1, 1),
    OpKind.REDUCESUM: (1, 1),
    OpKind.ACTIVATION: (1, 1),
    OpKind.PLU_ACTIVATION: (1, 1),
    OpKind.GATHER: (1, 1),
    OpKind.POWER: (1, 1),
    OpKind.SQRT: (1, 1),
    OpKind.EXP: (1, 1),
    OpKind.TRANSPOSE: (1, 1),
    OpKind.RESHAPE: (1, 1),
    OpKind.RMSNORM: (2, 2),
    OpKind.CONV1D: (2, 2),
    OpKind.SOFTMAX: (1, 1),
}

_MPU_KINDS = {OpKind.MATMUL, OpKind.VECMAT, OpKind.CONV1D}


@dataclass
class Node:
    id: int
    kind: OpKind
    inputs: tuple
    attrs: dict = field(default_factory=dict)


class OpGraph:
    """Append-only operator graph with static shapes."""

    def __init__(self, name: str):
        self.name = name
        self.nodes: list[Node] = []
        self.graph_inputs: list[int] = []
        self.graph_outputs: list[int] = []
        self.tables: dict[str, plu_mod.PluTable] = {}
        self.metadata: dict = {}
        self._shapes: dict[int, tuple] | None = None

    # -- construction ------------------------------------------------------

    def add_node(self, op, inputs=(), **attrs) -> int:
        kind = OpKind(op)
        inputs = tuple(int(i) for i in inputs)
        lo, hi = _ARITY[kind]
        if not lo <= len(inputs) <= hi:
            raise GraphError(f"{kind.value} takes {lo} input(s), got {len(inputs)}")
        nid = len(self.nodes)
        for i in inputs:
            if not 0 <= i < nid:
                raise GraphError(f"node {nid} references missing input id {i}")
        if kind in (OpKind.CUMSUM, OpKind.REDUCESUM) and attrs.get("axis", 0) != 0:
            raise GraphError(f"{kind.value} supports axis 0 only (insert Transpose for other axes)")
        if kind is OpKind.ACTIVATION and attrs.get("kind") not in ACTIVATION_KINDS:
            raise GraphError(f"unknown activation kind {attrs.get('kind')!r}")
        if kind is OpKind.CONST and not isinstance(attrs.get("value"), Tensor):
            raise GraphError("Const requires a Tensor 'value' attribute")
        if kind is OpKind.INPUT and "shape" not in attrs:
            raise GraphError("Input requires a 'shape' attribute")
        self.nodes.append(Node(id=nid, kind=kind, inputs=inputs, attrs=dict(attrs)))
        if kind is OpKind.INPUT:
            self.graph_inputs.append(nid)
        self._shapes = None
        return nid

    def input(self, shape) -> int:
        return self.add_node(OpKind.INPUT, shape=tuple(shape))

    def const(self, value: Tensor, **attrs) -> int:
        return self.add_node(OpKind.CONST, value=value, **attrs)

    def mark_output(self, nid: int) -> None:
        if not 0 <= nid < len(self.nodes):
            raise GraphError(f"cannot mark missing node {nid} as output")
        self.graph_outputs.append(nid)

    def node(self, nid: int) -> Node:
        return self.nodes[nid]

    # -- analysis ----------------------------------------------------------

    def census(self) -> dict:
        """Node count per kind; Input and Const carry no compute and are skipped."""
        counts: dict[OpKind, int] = {}
        for n in self.nodes:
            if n.kind in (OpKind.INPUT, OpKind.CONST):
                continue
            counts[n.kind] = counts.get(n.kind, 0) + 1
        return counts

    def engine_of(self, node: Node) -> str:
        """'MPU', 'DSP', or 'PLU' (fused lookup in the drain path)."""
        if node.kind is OpKind.PLU_ACTIVATION and node.attrs.get("fused"):
            return "PLU"
        override = node.attrs.get("engine")
        if override:
            return str(override)
        return "MPU" if node.kind in _MPU_KINDS else "DSP"

    def infer_shapes(self, input_shapes=None) -> dict:
        """Assign a concrete shape to every node.

        Input shapes come from each Input node's 'shape' attribute unless
        an explicit list (in graph-input order) is given.
        """
        given = None
        if input_shapes is not None:
            if len(input_shapes) != len(self.graph_inputs):
                raise ShapeError(
                    f"graph has {len(self.graph_inputs)} inputs, got {len(input_shapes)} shapes"
                )
            given = {nid: tuple(s) for nid, s in zip(self.graph_inputs, input_shapes)}
        shapes: dict[int, tuple] = {}
        for n in self.nodes:
            shapes[n.id] = self._infer_node(n, shapes, given)
        self._shapes = shapes
        return shapes

    @property
    def shapes(self) -> dict:
        if self._shapes is None:
            self.infer_shapes()
        return self._shapes

    def _infer_node(self, n: Node, shapes, given) -> tuple:
        k = n.kind
        ins = [shapes[i] for i in n.inputs]

        def fail(msg):
            raise ShapeError(f"node {n.id} ({k.value}): {msg}")

        if k is OpKind.INPUT:
            return given[n.id] if given else tuple(n.attrs["shape"])
        if k is OpKind.CONST:
            return tuple(n.attrs["value"].shape)
        if k is OpKind.MATMUL:
            (a, b) = ins
            if len(a) != 2 or len(b) != 2 or a[1] != b[0]:
                fail(f"cannot multiply {a} x {b}")
            return (a[0], b[1])
        if k is OpKind.VECMAT:
            (v, x) = ins
            if len(v) != 2 or v[0] != 1 or len(x) != 2 or v[1] != x[0]:
                fail(f"cannot apply vector {v} to {x}")
            return (1, x[1])
        if k in (OpKind.ADD, OpKind.MULTIPLY):
            (a, b) = ins
            try:
                out = np.broadcast_shapes(a, b)
            except ValueError:
                out = None
            if out is None or len(out) > 2:
                fail(f"shapes {a} and {b} do not broadcast")
            return tuple(out)
        if k is OpKind.CUMSUM:
            return ins[0]
        if k is OpKind.REDUCESUM:
            if len(ins[0]) != 2:
                fail(f"expects rank 2, got {ins[0]}")
            return (1, ins[0][1])
        if k in (OpKind.ACTIVATION, OpKind.PLU_ACTIVATION, OpKind.POWER, OpKind.SQRT, OpKind.EXP, OpKind.SOFTMAX):
            return ins[0]
        if k is OpKind.GATHER:
            axis = int(n.attrs.get("axis", 0))
            idx = list(n.attrs["indices"])
            shp = ins[0]
            if axis >= len(shp):
                fail(f"gather axis {axis} out of range for {shp}")
            if any(not 0 <= i < shp[axis] for i in idx):
                fail(f"gather indices out of range for {shp}")
            out = list(shp)
            out[axis] = len(idx)
            return tuple(out)
        if k is OpKind.TRANSPOSE:
            if len(ins[0]) != 2:
                fail(f"expects rank 2, got {ins[0]}")
            return (ins[0][1], ins[0][0])
        if k is OpKind.RESHAPE:
            target = tuple(n.attrs["shape"])
            if int(np.prod(target)) != int(np.prod(ins[0])):
                fail(f"cannot reshape {ins[0]} to {target}")
            return target
        if k is OpKind.RMSNORM:
            (x, w) = ins
            if len(x) != 2 or w != (1, x[1]):
                fail(f"expects x [m,n] and weight [1,n], got {x} and {w}")
            return x
        if k is OpKind.CONV1D:
            (x, w) = ins
            if len(x) != 2 or len(w) != 2 or w[1] != x[1]:
                fail(f"expects x [seq,c] and kernel [k,c], got {x} and {w}")
            return x
        fail("no shape rule")

    # -- execution ---------------------------------------------------------

    def execute(self, inputs, strict=None) -> list:
        """Evaluate graph outputs on the given input tensors.

        `inputs` is a list in graph-input order or a dict keyed by node id.
        With strict-finite mode on (the default for model graphs, via
        metadata), any non-finite intermediate raises NumericError.
        """
        if strict is None:
            strict = bool(self.metadata.get("strict_finite", False))
        if isinstance(inputs, dict):
            feed = {int(k): v for k, v in inputs.items()}
        else:
            if len(inputs) != len(self.graph_inputs):
                raise ShapeError(
                    f"graph has {len(self.graph_inputs)} inputs, got {len(inputs)}"
                )
            feed = dict(zip(self.graph_inputs, inputs))
        shapes = self.shapes
        values: dict[int, Tensor] = {}
        for n in self.nodes:
            if n.kind is OpKind.INPUT:
                t = feed.get(n.id)
                if t is None:
                    raise ShapeError(f"missing input tensor for node {n.id}")
                if tuple(t.shape) != shapes[n.id]:
                    raise ShapeError(
                        f"input {n.id} has shape {tuple(t.shape)}, declared {shapes[n.id]}"
                    )
                values[n.id] = t
            else:
                values[n.id] = self._eval_node(n, values)
            if strict and not np.all(np.isfinite(values[n.id].array)):
                raise NumericError(f"non-finite value at node {n.id} ({n.kind.value})")
        return [values[o] for o in self.graph_outputs]

    def _eval_node(self, n: Node, values) -> Tensor:
        k = n.kind
        ins = [values[i] for i in n.inputs]
        if k is OpKind.CONST:
            return n.attrs["value"]
        if k is OpKind.MATMUL:
            return matmul(ins[0], ins[1])
        if k is OpKind.VECMAT:
            return vecmat(ins[0], ins[1])
        if k is OpKind.ADD:
            return Tensor(ins[0].array + ins[1].array)
        if k is OpKind.MULTIPLY:
            return Tensor(ins[0].array * ins[1].array)
        if k is OpKind.CUMSUM:
            x = ins[0]
            if x.rank == 1:
                col = cumsum_ref(Tensor(x.array.reshape(-1, 1)))
                return Tensor(col.array.reshape(-1))
            return cumsum_ref(x)
        if k is OpKind.REDUCESUM:
            return reducesum_ref(ins[0])
        if k is OpKind.ACTIVATION:
            return activation(ins[0], n.attrs["kind"], n.attrs.get("beta", 1.0))
        if k is OpKind.PLU_ACTIVATION:
            table = self.tables.get(n.attrs["table"])
            if table is None:
                raise GraphError(f"node {n.id} references missing table {n.attrs['table']!r}")
            out = plu_mod.eval(table, ins[0].array)
            return Tensor(np.asarray(out, dtype=np.float32))
        if k is OpKind.GATHER:
            idx = list(n.attrs["indices"])
            return Tensor(np.take(ins[0].array, idx, axis=int(n.attrs.get("axis", 0))))
        if k is OpKind.POWER:
            e = float(n.attrs["exponent"])
            return Tensor(np.power(ins[0].array.astype(np.float64), e).astype(np.float32))
        if k is OpKind.SQRT:
            return Tensor(np.sqrt(ins[0].array))
        if k is OpKind.EXP:
            with np.errstate(over="ignore"):  # strict mode flags the inf
                return Tensor(np.exp(ins[0].array))
        if k is OpKind.TRANSPOSE:
            return Tensor(ins[0].array.T)
        if k is OpKind.RESHAPE:
            return Tensor(ins[0].array.reshape(tuple(n.attrs["shape"])))
        if k is OpKind.RMSNORM:
            x = ins[0].array.astype(np.float64)
            w = ins[1].array.astype(np.float64)
            eps = float(n.attrs.get("eps", 1e-5))
            rms = np.sqrt(np.mean(x * x, axis=1, keepdims=True) + eps)
            return Tensor(((x / rms) * w).astype(np.float32))
        if k is OpKind.CONV1D:
            return self._conv1d(ins[0].array, ins[1].array)
        if k is OpKind.SOFTMAX:
            x = ins[0].array.astype(np.float64)
            x = x - np.max(x, axis=-1, keepdims=True)
            e = np.exp(x)
            return Tensor((e / np.sum(e, axis=-1, keepdims=True)).astype(np.float32))
        raise GraphError(f"no executor for kind {k.value}")

    @staticmethod
    def _conv1d(x: np.ndarray, w: np.ndarray) -> Tensor:
        # Depthwise causal convolution: out[t,c] sums w[j,c]*x[t-(k-1)+j, c],
        # reading zeros before the first row.
        k = w.shape[0]
        padded = np.vstack([np.zeros((k - 1, x.shape[1]), dtype=np.float32), x])
        out = np.zeros_like(x)
        for j in range(k):
            out += w[j] * padded[j : j + x.shape[0]]
        return Tensor(out)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        """Stable-order JSON document for golden-file comparisons."""
        nodes = []
        for n in self.nodes:
            nodes.append(
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "attrs": _attrs_to_json(n.attrs),
                    "inputs": list(n.inputs),
                }
            )
        doc = {
            "name": self.name,
            "nodes": nodes,
            "inputs": list(self.graph_inputs),
            "outputs": list(self.graph_outputs),
            "metadata": _plain_to_json(self.metadata),
            "tables": {tid: _table_to_json(t) for tid, t in sorted(self.tables.items())},
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "OpGraph":
        doc = json.loads(text)
        g = cls(doc["name"])
        for nd in doc["nodes"]:
            kind = OpKind(nd["kind"])
            attrs = _attrs_from_json(nd["attrs"])
            node = Node(id=int(nd["id"]), kind=kind, inputs=tuple(nd["inputs"]), attrs=attrs)
            if node.id != len(g.nodes):
                raise GraphError("node ids must be dense and ordered")
            g.nodes.append(node)
        g.graph_inputs = [int(i) for i in doc["inputs"]]
        g.graph_outputs = [int(i) for i in doc["outputs"]]
        g.metadata = doc.get("metadata", {})
        g.tables = {tid: _table_from_json(t) for tid, t in doc.get("tables", {}).items()}
        return g

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_json())

    @classmethod
    def load(cls, path) -> "OpGraph":
        with open(path) as f:
            return cls.from_json(f.read())


def _plain_to_json(v):
    if isinstance(v, dict):
        return {k: _plain_to_json(v[k]) for k in v}
    if isinstance(v, (tuple, list)):
        return [_plain_to_json(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _attrs_to_json(attrs: dict) -> dict:
    out = {}
    for key in sorted(attrs):
        v = attrs[key]
        if isinstance(v, Tensor):
            out[key] = {"shape": list(v.shape), "data": [float(x) for x in v.flat()]}
        elif isinstance(v, zvc_mod.ZvcTensor):
            out[key] = {"zvc_b64": base64.b64encode(zvc_mod.to_bytes(v)).decode("ascii")}
        else:
            out[key] = _plain_to_json(v)
    return out


def _attrs_from_json(attrs: dict) -> dict:
    out = {}
    for key, v in attrs.items():
        if isinstance(v, dict) and set(v) == {"shape", "data"}:
            out[key] = Tensor(np.array(v["data"], dtype=np.float32).reshape(v["shape"]))
        elif isinstance(v, dict) and set(v) == {"zvc_b64"}:
            out[key] = zvc_mod.from_bytes(base64.b64decode(v["zvc_b64"]))
        elif key in ("shape", "indices"):
            out[key] = tuple(v) if key == "shape" else list(v)
        else:
            out[key] = v
    return out


def _table_to_json(t: plu_mod.PluTable) -> dict:
    return {
        "func": t.func,
        "beta": t.beta,
        "breakpoints": [float(x) for x in t.breakpoints],
        "slopes": [float(x) for x in t.slopes],
        "intercepts": [float(x) for x in t.intercepts],
        "left_ext": [float(x) for x in t.left_ext],
        "right_ext": [float(x) for x in t.right_ext],
    }


def _table_from_json(d: dict) -> plu_mod.PluTable:
    return plu_mod.PluTable(
        func=d["func"],
        beta=float(d["beta"]),
        breakpoints=np.array(d["breakpoints"], dtype=np.float32),
        slopes=np.array(d["slopes"], dtype=np.float32),
        intercepts=np.array(d["intercepts"], dtype=np.float32),
        left_ext=tuple(d["left_ext"]),
        right_ext=tuple(d["right_ext"]),
    )
