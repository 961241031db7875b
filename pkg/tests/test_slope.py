import numpy as np
import pytest

from mixsel.selection import select_model
from mixsel.slope import NoJumpError, SlopePath, complexity_path, default_grid, detect_jump, parse_grid, slope_select


def _path(K, delta):
    K = np.asarray(K, dtype=float)
    delta = np.asarray(delta, dtype=float)
    return SlopePath(K, np.arange(K.size), delta, delta.astype(int), list(range(K.size)))


def _nested_fixture(dims=(1, 2, 4, 8, 16, 32)):
    """Contrasts ``-2 Delta_m``, so the criterion is ``(K - 2) Delta_m``."""
    return [(f"m{d}", -2.0 * d, float(d), d) for d in dims]


class TestGrid:
    def test_default_has_81_points(self):
        grid = default_grid()
        assert grid.size == 81
        assert grid[0] == 0.0 and grid[-1] == pytest.approx(4.0)

    def test_parse(self):
        assert parse_grid("0:4:0.05").size == 81
        assert parse_grid("1:2:0.5").tolist() == [1.0, 1.5, 2.0]
        with pytest.raises(ValueError):
            parse_grid("0:4")
        with pytest.raises(ValueError):
            parse_grid("0:4:-1")


class TestComplexityPath:
    def test_two_model_crossover(self):
        rows = [("m1", -1.0, 1.0, 1), ("m2", -1.05, 2.0, 2)]
        path = complexity_path(rows, [0.0, 0.04, 0.06, 0.1])
        assert path.delta.tolist() == [2.0, 2.0, 1.0, 1.0]

    def test_k_zero_is_contrast_argmin(self):
        rows = _nested_fixture()
        assert complexity_path(rows, [0.0]).dims[0] == 32

    def test_single_model(self):
        path = complexity_path([("only", -0.3, 5.0, 5)], default_grid())
        assert np.all(path.delta == 5.0)

    def test_empty_grid(self):
        with pytest.raises(ValueError, match="empty"):
            complexity_path(_nested_fixture(), [])

    def test_unsorted_grid(self):
        with pytest.raises(ValueError):
            complexity_path(_nested_fixture(), [1.0, 0.5])

    def test_negative_delta(self):
        with pytest.raises(ValueError):
            complexity_path([("a", 0.0, -1.0, 1)], [0.0])

    def test_monotone_random(self, rng):
        for _ in range(50):
            k = int(rng.integers(2, 20))
            rows = [(i, -rng.exponential(), rng.exponential(), i + 1) for i in range(k)]
            path = complexity_path(rows, default_grid())
            assert np.all(np.diff(path.delta) <= 0)


class TestDetectJump:
    def test_max_drop(self):
        path = _path([0.5, 1.0, 1.5, 2.0, 2.5, 3.0], [512, 512, 480, 64, 32, 32])
        assert detect_jump(path) == 2.0

    def test_ties_go_to_smallest_k(self):
        assert detect_jump(_path([0, 1, 2, 3], [10, 5, 5, 0])) == 1.0

    def test_flat(self):
        with pytest.raises(NoJumpError):
            detect_jump(_path([0, 1, 2], [3, 3, 3]))

    def test_single_point(self):
        with pytest.raises(NoJumpError):
            detect_jump(_path([0.0], [3]))

    def test_synthetic_crossover_at_two(self):
        path = complexity_path(_nested_fixture(), default_grid())
        assert abs(detect_jump(path) - 2.0) <= 0.05 + 1e-12


class TestSlopeSelect:
    def test_final_at_twice_k_tilde(self):
        rows = _nested_fixture()
        report = slope_select(rows, default_grid())
        assert report.meta["k_tilde"] == pytest.approx(2.0)
        assert report.meta["final_K"] == pytest.approx(4.0)
        assert report.meta["jump_found"]
        assert report.selected_model == "m1"

    def test_compositional_identity(self, rng):
        rows = [(i, -np.sqrt(i + 1.0) + rng.normal(scale=0.01), (i + 1) / 50, i + 1) for i in range(30)]
        report = slope_select(rows, default_grid())
        k2 = 2 * report.meta["k_tilde"]
        direct = select_model([(m, c, k2 * d, dim) for m, c, d, dim in rows])
        assert report.selected == direct.selected

    def test_off_grid_final_k(self):
        rows = [("a", 0.0, 1.0, 1), ("b", -1.3, 2.0, 2)]
        report = slope_select(rows, [0.0, 0.7, 1.4])
        # the jump lands at K = 1.4; the final 2.8 lies outside the grid and is evaluated directly
        assert report.meta["final_K"] == pytest.approx(2.8)
        assert report.selected_model == "a"

    def test_no_jump_fallback(self):
        rows = [("a", -1.0, 1.0, 1), ("b", 0.0, 2.0, 2)]
        with pytest.warns(UserWarning, match="no complexity jump"):
            report = slope_select(rows, [0.0, 1.0, 3.0])
        assert report.meta["k_tilde"] == 1.5
        assert not report.meta["jump_found"]

    def test_path_csv(self, tmp_path):
        report = slope_select(_nested_fixture(), default_grid())
        report.path.write_csv(tmp_path / "p.csv")
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines[0] == "K,model,delta"
        assert len(lines) == 82
