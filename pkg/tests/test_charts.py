import numpy as np
import pytest

from holonomylab.charts import (
    Chart,
    concat_paths,
    coordinate_circle,
    lasso_path,
    line_path,
    product_chart,
    smooth_abs,
    smooth_abs_d1,
)
from holonomylab.errors import DomainError


@pytest.fixture
def box():
    return Chart(("x", "y"), np.array([-1.0, 0.0]), np.array([1.0, 4.0]))


def test_chart_basics(box):
    assert box.dim == 2
    assert box.index("y") == 1
    assert np.allclose(box.widths, [2.0, 4.0])
    assert box.contains([0.0, 2.0])
    assert not box.contains([0.0, 5.0])
    assert box.contains([0.0, 4.05], slack=0.1)
    with pytest.raises(DomainError):
        box.require([2.0, 2.0])


def test_chart_sample_in_bounds(box):
    rng = np.random.default_rng(0)
    pts = box.sample(rng, 200, shrink=0.1)
    assert pts.shape == (200, 2)
    assert np.all(pts[:, 0] >= -0.8) and np.all(pts[:, 0] <= 0.8)
    assert np.all(pts[:, 1] >= 0.4) and np.all(pts[:, 1] <= 3.6)


def test_chart_rejects_bad_bounds():
    with pytest.raises(ValueError):
        Chart(("x",), np.array([1.0]), np.array([0.0]))


def test_product_chart(box):
    other = Chart(("t",), np.array([0.0]), np.array([1.0]))
    prod = product_chart(box, other)
    assert prod.coord_names == ("x", "y", "t")
    assert np.allclose(prod.lower, [-1.0, 0.0, 0.0])


def test_line_path_endpoints_and_velocity(box):
    path = line_path(box, [-0.5, 1.0], [0.5, 3.0])
    assert np.allclose(path.point(0.0), [-0.5, 1.0])
    assert np.allclose(path.point(1.0), [0.5, 3.0])
    assert np.allclose(path.tangent(0.3), [1.0, 2.0])
    assert path.velocity_residual() < 1e-8


def test_circle_is_a_loop_at_base(box):
    path = coordinate_circle(box, [0.0, 2.0], (0, 1), 0.3)
    assert np.allclose(path.point(0.0), [0.0, 2.0])
    assert np.allclose(path.point(1.0), [0.0, 2.0], atol=1e-12)
    # stays inside the chart
    for s in np.linspace(0, 1, 50):
        assert box.contains(path.point(s))
    assert path.velocity_residual() < 1e-6


def test_concat_continuity_and_breakpoints(box):
    p1 = line_path(box, [-0.5, 1.0], [0.5, 1.0])
    p2 = line_path(box, [0.5, 1.0], [0.5, 3.0])
    path = concat_paths([p1, p2])
    assert path.breakpoints == (0.5,)
    assert np.allclose(path.point(0.5 - 1e-9), path.point(0.5 + 1e-9), atol=1e-6)
    # velocity doubles (two legs in unit time)
    assert np.allclose(path.tangent(0.25), [2.0, 0.0])
    assert np.allclose(path.tangent(0.75), [0.0, 4.0])


def test_lasso_returns_to_base(box):
    path = lasso_path(box, [-0.5, 1.0], [0.3, 2.5], (0, 1), 0.2)
    assert np.allclose(path.point(0.0), [-0.5, 1.0])
    assert np.allclose(path.point(1.0), [-0.5, 1.0], atol=1e-12)
    assert len(path.breakpoints) == 2


def test_smooth_abs_close_to_abs():
    for x in [-3.0, -0.1, 0.0, 0.05, 2.0]:
        assert abs(smooth_abs(x, 1e-6) - abs(x)) <= 1e-6
    # derivative consistent with finite differences
    for x in [-1.0, 0.3, 2.0]:
        fd = (smooth_abs(x + 1e-7) - smooth_abs(x - 1e-7)) / 2e-7
        assert abs(smooth_abs_d1(x) - fd) < 1e-5
