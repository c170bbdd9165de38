import numpy as np
import pytest

from epf.errors import DegenerateScaleError
from epf.transform import Z75, TransformState, asinh_forward, asinh_inverse, fit_transform_state


class TestFitTransformState:
    def test_median_and_scaled_mad(self):
        state = fit_transform_state(np.array([1.0, 2.0, 3.0, 4.0, 5.0]))
        assert state.median == 3.0
        assert state.mad_scaled == pytest.approx(1.0 / Z75)

    def test_matrix_input_is_flattened(self):
        prices = np.arange(48, dtype=float).reshape(2, 24)
        assert fit_transform_state(prices) == fit_transform_state(prices.ravel())

    @pytest.mark.parametrize("prices", [[7.0] * 10, [1.0, 1.0, 1.0, 1.0, 2.0], []])
    def test_degenerate_window(self, prices):
        with pytest.raises(DegenerateScaleError):
            fit_transform_state(np.array(prices))

    def test_invalid_state(self):
        with pytest.raises(DegenerateScaleError):
            TransformState(median=0.0, mad_scaled=0.0)
        with pytest.raises(DegenerateScaleError):
            TransformState(median=float("nan"), mad_scaled=1.0)

    def test_dict_round_trip(self):
        state = TransformState(median=41.5, mad_scaled=12.25)
        assert TransformState.from_dict(state.to_dict()) == state


class TestAsinh:
    def test_median_maps_to_zero(self):
        state = TransformState(median=50.0, mad_scaled=10.0)
        assert asinh_forward(state, 50.0) == 0.0

    def test_inverse_recovers_prices(self, rng):
        state = TransformState(median=60.0, mad_scaled=15.0)
        prices = np.concatenate([rng.normal(60.0, 200.0, 1_000_000), [-500.0, -0.01, 0.0, 3000.0, 1e7]])
        recovered = asinh_inverse(state, asinh_forward(state, prices))
        np.testing.assert_allclose(recovered, prices, rtol=1e-9, atol=1e-9)

    def test_forward_is_increasing(self):
        state = TransformState(median=0.0, mad_scaled=1.0)
        y = asinh_forward(state, np.linspace(-1000.0, 1000.0, 501))
        assert np.all(np.diff(y) > 0)
