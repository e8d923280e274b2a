"""Test cases for grid configuration and solved fields."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the fapchan directory to the Python path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from models.boundary_data import BoundaryData
from models.channel_params import params_new
from models.errors import GridError
from models.grid import FarField, GridConfig, ScalarField2D


class TestGridConfig:
    def test_node_counts(self) -> None:
        grid = GridConfig(half_width=4.0, height=2.0, spacing=0.1)
        assert grid.columns == 81
        assert grid.rows == 21
        assert grid.x1_nodes()[0] == -4.0
        assert grid.x2_nodes()[-1] == 2.0

    def test_spacing_must_divide(self) -> None:
        with pytest.raises(GridError):
            GridConfig(half_width=1.0, height=1.0, spacing=0.3)
        with pytest.raises(GridError):
            GridConfig(half_width=1.0, height=1.0, spacing=0.0)
        with pytest.raises(GridError):
            GridConfig(half_width=1.0, height=1.0, spacing=1.0)

    def test_fit_against_problem(self) -> None:
        params = params_new(2, (0, 0), 1, 1)
        strip = BoundaryData.indicator(0.0, 1.0)
        GridConfig().check_against(params, strip)
        with pytest.raises(GridError) as excinfo:
            GridConfig(half_width=5.0, height=4.0, spacing=0.1).check_against(params, strip)
        message = str(excinfo.value)
        assert "half_width" in message
        assert "height" in message
        with pytest.raises(GridError):
            GridConfig(half_width=20.0, height=8.0, spacing=0.1).check_against(params, BoundaryData.indicator(9.5, 1.0))

    def test_refined_and_enlarged(self) -> None:
        grid = GridConfig(half_width=4.0, height=2.0, spacing=0.1, far_field=FarField.REPRESENTATION)
        assert grid.refined().spacing == 0.05
        assert grid.refined().far_field is FarField.REPRESENTATION
        assert grid.enlarged().half_width == 8.0
        assert grid.to_dict()["far_field"] == "representation"


class TestScalarField2D:
    def setup_method(self) -> None:
        self.grid = GridConfig(half_width=1.0, height=1.0, spacing=0.5)
        x1, x2 = self.grid.x1_nodes(), self.grid.x2_nodes()
        # u = x1 + 2 x2 is reproduced exactly by bilinear interpolation
        self.field = ScalarField2D(x1, x2, x1[None, :] + 2.0 * x2[:, None], self.grid)

    def test_value_at(self) -> None:
        assert self.field.value_at(0.25, 0.75) == pytest.approx(1.75)
        with pytest.raises(ValueError):
            self.field.value_at(2.0, 0.5)

    def test_rows_iter(self) -> None:
        rows = list(self.field.rows_iter())
        assert len(rows) == self.grid.rows * self.grid.columns
        assert rows[0] == (-1.0, 0.0, -1.0)
        assert rows[1] == (-0.5, 0.0, -0.5)
        assert self.field.interior().shape == (1, 3)

    def test_shape_mismatch(self) -> None:
        with pytest.raises(GridError):
            ScalarField2D(self.grid.x1_nodes(), self.grid.x2_nodes(), np.zeros((2, 2)), self.grid)
