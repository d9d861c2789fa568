import numpy as np
import pytest

from idereg.errors import InvalidImpulseError, InvalidInputError
from idereg.function_space import PiecewiseMatrixFunction, Side, combine, step_basis
from idereg.functionals import (
    ImpulseRecord,
    LinearVectorFunctional,
    PointTerm,
    apply,
    build_delta,
    impulse_functional,
    magnitude,
    resolve_side,
    stack,
)


def test_point_terms_and_integral_weight():
    t = PiecewiseMatrixFunction.from_entries(0.0, 1.0, [[[0.0, 1.0]]])
    L = LinearVectorFunctional(
        out_dim=1,
        width=1,
        point_terms=(PointTerm(1.0, Side.LEFT, [[2.0]]),),
        weight=PiecewiseMatrixFunction.constant(0.0, 1.0, [[3.0]]),
    )
    # 2·x(1) + 3·∫ t dt
    np.testing.assert_allclose(apply(L, t), [[2.0 + 1.5]])
    np.testing.assert_allclose(L.apply(t), [[3.5]])


def test_apply_acts_columnwise():
    X = PiecewiseMatrixFunction.from_entries(0.0, 1.0, [[[1.0], [0.0, 1.0]]])
    L = LinearVectorFunctional(out_dim=1, width=1, point_terms=(PointTerm(0.5, Side.RIGHT, [[1.0]]),))
    np.testing.assert_allclose(apply(L, X), [[1.0, 0.5]])


def test_point_term_shape_is_checked():
    with pytest.raises(InvalidInputError):
        LinearVectorFunctional(out_dim=2, width=1, point_terms=(PointTerm(0.0, Side.RIGHT, [[1.0]]),))


def test_apply_rejects_width_mismatch():
    L = LinearVectorFunctional(out_dim=1, width=2, point_terms=(PointTerm(0.0, Side.RIGHT, [[1.0, 1.0]]),))
    with pytest.raises(InvalidInputError):
        apply(L, PiecewiseMatrixFunction.zeros(0.0, 1.0, 1, 1))


def test_impulse_functional_measures_the_jump_condition():
    imp = ImpulseRecord(0.4, E=[[0.0, 1.0]], S=[[0.0, 0.1]], gamma=[0.05])
    phi = impulse_functional(imp)
    H = step_basis(0.0, 1.0, 0.4, 2)
    # columns of H jump from 0 to e_j: φ H = E
    np.testing.assert_allclose(apply(phi, H), [[0.0, 1.0]])
    # constant columns: φ I = E - (E + S) = -S
    np.testing.assert_allclose(apply(phi, PiecewiseMatrixFunction.identity(0.0, 1.0, 2)), [[0.0, -0.1]])


@pytest.mark.parametrize(
    "E, S",
    [
        ([[1.0, 0.0]], [[-1.0, 0.0]]),  # E + S = 0
        ([[1.0, 0.0], [0.0, 1.0]], [[0.0, 0.0], [0.0, 0.0]]),  # k = n
        ([[1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]),  # shape mismatch
    ],
)
def test_invalid_impulses_are_rejected(E, S):
    with pytest.raises(InvalidImpulseError):
        ImpulseRecord(0.5, E, S)


def test_impulse_gamma_defaults_to_zero():
    imp = ImpulseRecord(0.5, [[1.0, 0.0, 0.0]], [[0.0, 0.0, 0.0]])
    assert (imp.k, imp.n) == (1, 3)
    np.testing.assert_array_equal(imp.gamma, [0.0])


def test_stack_keeps_row_order_and_sums_weights():
    ones = PiecewiseMatrixFunction.constant(0.0, 1.0, [[1.0]])
    first = LinearVectorFunctional(out_dim=1, width=1, point_terms=(PointTerm(0.0, Side.RIGHT, [[1.0]]),))
    second = LinearVectorFunctional(out_dim=2, width=1, weight=PiecewiseMatrixFunction.constant(0.0, 1.0, [[1.0], [2.0]]))
    L = stack([first, second])
    assert (L.out_dim, L.width) == (3, 1)
    x = PiecewiseMatrixFunction.from_entries(0.0, 1.0, [[[1.0, 1.0]]])
    # x(0) = 1, ∫ x = 1.5
    np.testing.assert_allclose(apply(L, x)[:, 0], [1.0, 1.5, 3.0])
    np.testing.assert_allclose(apply(L, ones)[:, 0], [1.0, 1.0, 2.0])


def test_stack_rejects_mixed_widths():
    a = LinearVectorFunctional(out_dim=1, width=1)
    b = LinearVectorFunctional(out_dim=1, width=2)
    with pytest.raises(InvalidInputError):
        stack([a, b])


def test_build_delta_orders_gammas_before_alpha():
    imps = [ImpulseRecord(0.3, [[1.0, 0.0]], [[0.0, 0.0]], [7.0]), ImpulseRecord(0.6, [[0.0, 1.0]], [[0.0, 0.0]], [8.0])]
    np.testing.assert_array_equal(build_delta(imps, [1.0, 2.0]), [7.0, 8.0, 1.0, 2.0])


def test_resolve_side():
    assert resolve_side(0.2, None, [0.5], 1.0) is Side.RIGHT
    assert resolve_side(1.0, None, [0.5], 1.0) is Side.LEFT
    assert resolve_side(0.5, "left", [0.5], 1.0) is Side.LEFT
    with pytest.raises(InvalidInputError):
        resolve_side(0.5, None, [0.5], 1.0)


def _mixed_functional():
    return LinearVectorFunctional(
        out_dim=2,
        width=1,
        point_terms=(PointTerm(0.5, Side.LEFT, [[1.0], [0.0]]), PointTerm(1.0, Side.LEFT, [[0.0], [-2.0]])),
        weight=PiecewiseMatrixFunction.from_entries(0.0, 1.0, [[[1.0, 1.0]], [[0.0, 0.0, 3.0]]]),
    )


def test_apply_is_linear():
    L = _mixed_functional()
    X = PiecewiseMatrixFunction.from_entries(0.0, 1.0, [[[[1.0, 2.0], [0.0, 0.0, 1.0]]], [[[0.5], [3.0, -1.0]]]], [0.5])
    Y = PiecewiseMatrixFunction.from_entries(0.0, 1.0, [[[0.0, 0.0, 0.0, 4.0], [-1.0]]])
    for alpha, beta in ((2.0, -0.5), (0.0, 3.0), (-1.0, 1.0)):
        np.testing.assert_allclose(
            apply(L, combine(alpha, X, beta, Y)),
            alpha * apply(L, X) + beta * apply(L, Y),
            atol=1e-12,
        )


def test_magnitude_bounds_the_applied_functional():
    L = _mixed_functional()
    X = PiecewiseMatrixFunction.from_entries(0.0, 1.0, [[[0.0, 1.0], [1.0]]])
    assert np.linalg.norm(apply(L, X)) <= magnitude(L, X) + 1e-12
    assert magnitude(L, X @ np.zeros((2, 0))) == 0.0
    # cancellation inside L leaves the operands' size untouched
    cancel = LinearVectorFunctional(
        out_dim=1,
        width=1,
        point_terms=(PointTerm(0.0, Side.RIGHT, [[1.0]]), PointTerm(1.0, Side.LEFT, [[-1.0]])),
    )
    one = PiecewiseMatrixFunction.constant(0.0, 1.0, [[1.0]])
    np.testing.assert_allclose(apply(cancel, one), [[0.0]])
    assert magnitude(cancel, one) == pytest.approx(2.0)
