"""Width-aware evaluation, and the batched kernels against the scalar evaluator."""
import random

import numpy as np
import pytest

from svagen.checker import kernels
from svagen.checker.evaluate import EvalError, eval_expr
from svagen.sva import parse_bool_expr
from svagen.sva.generate import AstGenerator

W = {"a": 4, "b": 8, "c": 1, "d": 8}


@pytest.mark.parametrize("text, env, want", [
    # hand-worked with Verilog sizing: operands extend to the widest side
    ("b + d == 0", {"b": 255, "d": 1}, 1),          # 8-bit wrap
    ("b + d", {"b": 255, "d": 1}, 0),               # self-determined: 8 bits
    ("~a == 8'hF0", {"a": 0x0F}, 1),                # a extends to 8 bits before ~
    ("~a", {"a": 0x0F}, 0),                         # 4 bits
    ("-a", {"a": 1}, 15),
    ("a - 1", {"a": 0}, 15),                        # unsized literal takes a's width
    ("a[3]", {"a": 8}, 1),
    ("b[5:2]", {"b": 0b0011_1100}, 0b1111),
    ("c ? a : b", {"a": 3, "b": 200, "c": 0}, 200),
    ("'1 == b", {"b": 255}, 1),
    ("'1 == b", {"b": 254}, 0),
    ("!b || c", {"b": 0, "c": 0}, 1),
    ("a && 2'b10", {"a": 1}, 1),
    ("4'hF + 4'h1", {}, 0),
    ("(a ^ 4'b1010) != a", {"a": 5}, 1),
    ("b >= d", {"b": 7, "d": 7}, 1),
])
def test_hand_worked_values(text, env, want):
    full = {"a": 0, "b": 0, "c": 0, "d": 0, **env}
    assert eval_expr(parse_bool_expr(text), full, W) == want


def test_unbound_name():
    with pytest.raises(EvalError):
        eval_expr(parse_bool_expr("zz"), {}, {})


@pytest.fixture(params=["numpy", "numba"])
def backend(request):
    if request.param == "numba" and not kernels.HAS_NUMBA:
        pytest.skip("numba missing")
    before = kernels.get_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(before)


def test_kernels_match_scalar_evaluation(backend):
    names = list(W)
    index = {n: i for i, n in enumerate(names)}
    rng = np.random.default_rng(7)
    cols = np.stack([rng.integers(0, 1 << W[n], 200) for n in names])
    for seed in range(150):
        expr = AstGenerator(random.Random(seed), names, W).bool_expr(4, False)
        got = kernels.run(kernels.compile_expr(expr, W, index), cols)
        want = [eval_expr(expr, {n: int(cols[i, k]) for i, n in enumerate(names)}, W)
                for k in range(cols.shape[1])]
        assert [int(v) for v in got] == want, expr


def test_backend_switch_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.set_backend("gpu")
