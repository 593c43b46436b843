"""Graph construction rules, shape inference, executor semantics, census,
and JSON stability."""

import numpy as np
import pytest

from xamba.errors import GraphError, NumericError, ShapeError
from xamba.graph import OpGraph, OpKind
from xamba.plu import fit_uniform
from xamba.tensor import Tensor


def T(values):
    return Tensor(np.array(values, dtype=np.float32))


def rand(shape, seed=0, lo=-1.0, hi=1.0):
    return Tensor(np.random.default_rng(seed).uniform(lo, hi, size=shape).astype(np.float32))


class TestConstruction:
    def test_two_node_graph(self):
        g = OpGraph("t")
        x = g.input((3, 2))
        c = g.add_node(OpKind.CUMSUM, [x])
        assert len(g.nodes) == 2 and c == 1
        assert g.graph_inputs == [x]

    def test_arity_error(self):
        g = OpGraph("t")
        x = g.input((3, 2))
        with pytest.raises(GraphError):
            g.add_node(OpKind.MATMUL, [x])

    def test_missing_input_id(self):
        g = OpGraph("t")
        with pytest.raises(GraphError):
            g.add_node(OpKind.CUMSUM, [999])

    def test_axis_restriction(self):
        g = OpGraph("t")
        x = g.input((3, 2))
        with pytest.raises(GraphError):
            g.add_node(OpKind.CUMSUM, [x], axis=1)
        with pytest.raises(GraphError):
            g.add_node(OpKind.REDUCESUM, [x], axis=1)

    def test_unknown_kind_rejected(self):
        g = OpGraph("t")
        with pytest.raises(ValueError):
            g.add_node("Scatter", [])

    def test_const_requires_tensor(self):
        g = OpGraph("t")
        with pytest.raises(GraphError):
            g.add_node(OpKind.CONST, [], value=[1, 2, 3])


class TestShapeInference:
    def test_cumsum_preserves(self):
        g = OpGraph("t")
        x = g.input((3, 2))
        c = g.add_node(OpKind.CUMSUM, [x])
        assert g.infer_shapes()[c] == (3, 2)

    def test_reducesum_row_reduction(self):
        g = OpGraph("t")
        x = g.input((3, 2))
        r = g.add_node(OpKind.REDUCESUM, [x])
        assert g.infer_shapes()[r] == (1, 2)

    def test_matmul_mismatch_names_node(self):
        g = OpGraph("t")
        a = g.input((3, 2))
        b = g.input((3, 2))
        m = g.add_node(OpKind.MATMUL, [a, b])
        with pytest.raises(ShapeError, match=f"node {m}"):
            g.infer_shapes()

    def test_reshape_conserves_elements(self):
        g = OpGraph("t")
        x = g.input((3, 4))
        g.add_node(OpKind.RESHAPE, [x], shape=(2, 6))
        g.infer_shapes()
        g2 = OpGraph("t2")
        x2 = g2.input((3, 4))
        g2.add_node(OpKind.RESHAPE, [x2], shape=(5, 2))
        with pytest.raises(ShapeError):
            g2.infer_shapes()

    def test_broadcast_rules(self):
        g = OpGraph("t")
        a = g.input((4, 3))
        row = g.input((1, 3))
        col = g.input((4, 1))
        scalar = g.input((1, 1))
        for other in (row, col, scalar):
            g.add_node(OpKind.MULTIPLY, [a, other])
        out = g.add_node(OpKind.MULTIPLY, [col, row])
        assert g.infer_shapes()[out] == (4, 3)

    def test_explicit_input_shapes_override(self):
        g = OpGraph("t")
        x = g.input((3, 2))
        c = g.add_node(OpKind.CUMSUM, [x])
        assert g.infer_shapes([(5, 7)])[c] == (5, 7)


class TestExecute:
    def test_cumsum_oracle(self):
        g = OpGraph("t")
        x = g.input((3, 2))
        g.mark_output(g.add_node(OpKind.CUMSUM, [x]))
        (out,) = g.execute([T([[1, 2], [3, 4], [5, 6]])])
        assert out.array.tolist() == [[1, 2], [4, 6], [9, 12]]

    def test_identity_mask_matmul(self):
        g = OpGraph("t")
        eye = g.const(T(np.eye(4)))
        x = g.input((4, 3))
        g.mark_output(g.add_node(OpKind.MATMUL, [eye, x]))
        v = rand((4, 3), seed=5)
        (out,) = g.execute([v])
        assert out == v

    def test_pure_bit_identical(self):
        g = OpGraph("t")
        x = g.input((6, 6))
        s = g.add_node(OpKind.ACTIVATION, [x], kind="silu")
        g.mark_output(g.add_node(OpKind.CUMSUM, [s]))
        v = rand((6, 6), seed=6)
        a = g.execute([v])[0]
        b = g.execute([v])[0]
        assert a == b

    def test_strict_mode_names_node(self):
        g = OpGraph("t")
        x = g.input((1, 2))
        e = g.add_node(OpKind.EXP, [x])
        g.mark_output(e)
        big = T([[200.0, 1.0]])  # exp overflows float32
        with pytest.raises(NumericError, match=f"node {e}"):
            g.execute([big], strict=True)
        out = g.execute([big], strict=False)[0]
        assert np.isinf(out.array[0, 0])

    def test_gather_conv_rmsnorm_softmax_power(self):
        g = OpGraph("t")
        x = g.input((4, 6))
        ga = g.add_node(OpKind.GATHER, [x], axis=1, indices=[5, 0])
        w = g.const(T(np.linspace(-1, 1, 12).reshape(2, 6)))
        conv = g.add_node(OpKind.CONV1D, [x, w])
        nw = g.const(T(np.ones((1, 6))))
        norm = g.add_node(OpKind.RMSNORM, [x, nw], eps=1e-5)
        sm = g.add_node(OpKind.SOFTMAX, [x])
        pw = g.add_node(OpKind.POWER, [x], exponent=2.0)
        for nid in (ga, conv, norm, sm, pw):
            g.mark_output(nid)
        v = rand((4, 6), seed=7)
        a = v.array.astype(np.float64)
        got = g.execute([v])
        np.testing.assert_allclose(got[0].array, a[:, [5, 0]], rtol=1e-6)
        wk = np.linspace(-1, 1, 12).reshape(2, 6)
        padded = np.vstack([np.zeros((1, 6)), a])
        expect = wk[0] * padded[0:4] + wk[1] * padded[1:5]
        np.testing.assert_allclose(got[1].array, expect, rtol=1e-5, atol=1e-6)
        rms = np.sqrt((a * a).mean(axis=1, keepdims=True) + 1e-5)
        np.testing.assert_allclose(got[2].array, a / rms, rtol=1e-5)
        e = np.exp(a - a.max(axis=1, keepdims=True))
        np.testing.assert_allclose(got[3].array, e / e.sum(axis=1, keepdims=True), rtol=1e-5)
        np.testing.assert_allclose(got[4].array, a * a, rtol=1e-6)

    def test_rank1_cumsum(self):
        g = OpGraph("t")
        x = g.input((4,))
        g.mark_output(g.add_node(OpKind.CUMSUM, [x]))
        (out,) = g.execute([T([1, 2, 3, 4])])
        assert out.array.tolist() == [1, 3, 6, 10]

    def test_missing_table(self):
        g = OpGraph("t")
        x = g.input((2, 2))
        g.mark_output(g.add_node(OpKind.PLU_ACTIVATION, [x], table="silu", fused=False))
        with pytest.raises(GraphError):
            g.execute([rand((2, 2))])

    def test_plu_node_uses_table(self):
        g = OpGraph("t")
        x = g.input((2, 3))
        g.tables["silu"] = fit_uniform("silu", 1.0, -8, 8, 64)
        g.mark_output(g.add_node(OpKind.PLU_ACTIVATION, [x], table="silu", fused=True))
        v = rand((2, 3), seed=8, lo=-4, hi=4)
        (out,) = g.execute([v])
        from xamba.tensor import activation

        diff = np.abs(out.array - activation(v, "silu").array)
        assert diff.max() <= 4e-3  # within the S=64 certified error


class TestCensusAndEngines:
    def test_empty_graph_census(self):
        assert OpGraph("e").census() == {}

    def test_inputs_consts_excluded(self):
        g = OpGraph("t")
        x = g.input((2, 2))
        g.const(T(np.eye(2)))
        g.add_node(OpKind.ADD, [x, x])
        assert g.census() == {OpKind.ADD: 1}

    def test_engine_defaults_and_override(self):
        g = OpGraph("t")
        a = g.input((2, 2))
        b = g.input((2, 2))
        mm = g.add_node(OpKind.MATMUL, [a, b])
        ad = g.add_node(OpKind.ADD, [a, b])
        forced = g.add_node(OpKind.ADD, [a, b], engine="MPU")
        plu_f = g.add_node(OpKind.PLU_ACTIVATION, [ad], table="x", fused=True)
        plu_u = g.add_node(OpKind.PLU_ACTIVATION, [ad], table="x", fused=False)
        assert g.engine_of(g.node(mm)) == "MPU"
        assert g.engine_of(g.node(ad)) == "DSP"
        assert g.engine_of(g.node(forced)) == "MPU"
        assert g.engine_of(g.node(plu_f)) == "PLU"
        assert g.engine_of(g.node(plu_u)) == "DSP"


class TestJson:
    def build(self):
        g = OpGraph("roundtrip")
        x = g.input((3, 3))
        mask = g.const(T(np.tril(np.ones((3, 3)))))
        mm = g.add_node(OpKind.MATMUL, [mask, x])
        act = g.add_node(OpKind.ACTIVATION, [mm], kind="softplus", beta=2.0)
        g.tables["silu"] = fit_uniform("silu", 1.0, -8, 8, 8)
        g.metadata = {"strict_finite": True, "note": "test"}
        g.mark_output(act)
        return g

    def test_roundtrip_executes_identically(self):
        g = self.build()
        g2 = OpGraph.from_json(g.to_json())
        v = rand((3, 3), seed=9)
        assert g.execute([v])[0] == g2.execute([v])[0]

    def test_byte_stable(self):
        a = self.build().to_json()
        b = self.build().to_json()
        assert a == b
        assert OpGraph.from_json(a).to_json() == a
