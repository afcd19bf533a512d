import math

import numpy as np
import pytest
import yaml

from areasearch.errors import ConfigError, DegeneratePriorError
from areasearch.grid import GridSpec, integrate
from areasearch.scenarios import (
    CircleSet,
    RoadNetwork,
    build_scenario,
    build_test_scenario,
    gaussian_prior,
    load_circles,
    load_roads,
    region_prior,
    replicate_fleet,
    road_prior,
    sample_targets,
    scenario_to_config,
    set_by_path,
)
from areasearch.sensing import intensity


class TestGaussianPrior:
    def test_reference_setup(self):
        grid = GridSpec(1000.0, 1000.0, 250, 250)
        prior = gaussian_prior(grid, (500.0, 500.0), 150.0, 150.0)
        assert integrate(prior) == pytest.approx(1.0, abs=1e-9)
        j, i = np.unravel_index(np.argmax(prior.values), prior.values.shape)
        x = (i + 0.5) * grid.dx
        y = (j + 0.5) * grid.dy
        assert abs(x - 500.0) <= grid.dx
        assert abs(y - 500.0) <= grid.dy

    def test_symmetric_under_axis_swap(self):
        grid = GridSpec(400.0, 400.0, 40, 40)
        prior = gaussian_prior(grid, (200.0, 200.0), 60.0, 60.0)
        assert np.allclose(prior.values, prior.values.T, atol=1e-12)

    def test_small_sigma_mass_concentration(self):
        # 2-D Gaussian mass within r <= k*sigma is 1 - exp(-k^2/2):
        # 98.89% at 3 sigma (not 99%, the 1-D figure), 99.4% at 3.2 sigma.
        grid = GridSpec(400.0, 400.0, 100, 100)
        sigma = 2.5 * grid.dx
        prior = gaussian_prior(grid, (200.0, 200.0), sigma, sigma)
        X, Y = grid.mesh()
        r2 = (X - 200.0) ** 2 + (Y - 200.0) ** 2
        mass3 = prior.values[r2 <= (3 * sigma) ** 2].sum() * grid.cell_area
        assert mass3 >= 0.985
        mass32 = prior.values[r2 <= (3.2 * sigma) ** 2].sum() * grid.cell_area
        assert mass32 >= 0.99


class TestRegionPrior:
    def test_single_disc_uniform(self):
        grid = GridSpec(1000.0, 1000.0, 200, 200)
        r = 220.0
        prior = region_prior(grid, CircleSet(((500.0, 500.0, r),)))
        inside = prior.values > 0
        level = prior.values[inside]
        assert np.allclose(level, level[0])
        assert level[0] == pytest.approx(1.0 / (math.pi * r * r), rel=0.02)

    def test_fully_subtracted_region_rejected(self):
        grid = GridSpec(1000.0, 1000.0, 100, 100)
        circles = CircleSet(((500.0, 500.0, 100.0),),
                            ((500.0, 500.0, 150.0),))
        with pytest.raises(DegeneratePriorError):
            region_prior(grid, circles)

    def test_mass_splits_by_area(self):
        grid = GridSpec(1000.0, 1000.0, 250, 250)
        r = 120.0
        prior = region_prior(grid, CircleSet(
            ((250.0, 250.0, r), (750.0, 750.0, r))))
        X, Y = grid.mesh()
        near_first = (X - 250.0) ** 2 + (Y - 250.0) ** 2 <= (r + 10) ** 2
        mass_first = prior.values[near_first].sum() * grid.cell_area
        assert mass_first == pytest.approx(0.5, abs=0.02)

    def test_radius_validation(self):
        with pytest.raises(ValueError):
            CircleSet(((0.0, 0.0, -5.0),))


class TestRoadPrior:
    def test_short_segment_degenerates_to_bump(self):
        grid = GridSpec(1000.0, 1000.0, 100, 100)
        net = RoadNetwork(((495.0, 500.0, 505.0, 500.0),), sigma=80.0)
        prior = road_prior(grid, net)
        j, i = np.unravel_index(np.argmax(prior.values), prior.values.shape)
        x = (i + 0.5) * grid.dx
        y = (j + 0.5) * grid.dy
        assert abs(x - 500.0) <= grid.dx
        assert abs(y - 500.0) <= grid.dy

    def test_mass_near_network(self):
        # sigma = 100 m: at least 95% of mass within 300 m of some segment
        grid = GridSpec(2000.0, 1000.0, 200, 100)
        net = RoadNetwork(((200.0, 500.0, 1200.0, 400.0),
                           (1200.0, 400.0, 1800.0, 700.0)), sigma=100.0)
        prior = road_prior(grid, net)
        X, Y = grid.mesh()
        dist = np.full(X.shape, np.inf)
        for x1, y1, x2, y2 in net.segments:
            vx, vy = x2 - x1, y2 - y1
            L2 = vx * vx + vy * vy
            t = np.clip(((X - x1) * vx + (Y - y1) * vy) / L2, 0.0, 1.0)
            d = np.hypot(X - (x1 + t * vx), Y - (y1 + t * vy))
            dist = np.minimum(dist, d)
        mass = prior.values[dist <= 300.0].sum() * grid.cell_area
        assert mass >= 0.95

    def test_refinement_self_consistency(self):
        grid = GridSpec(1000.0, 500.0, 100, 50)
        net = RoadNetwork(((100.0, 250.0, 900.0, 300.0),), sigma=60.0)
        coarse = road_prior(grid, net, samples_per_sigma=4.0)
        fine = road_prior(grid, net, samples_per_sigma=8.0)
        l1 = np.abs(coarse.values - fine.values).sum() * grid.cell_area
        assert l1 < 0.005

    def test_segment_validation(self):
        with pytest.raises(ValueError):
            RoadNetwork(((0.0, 0.0, 0.0, 0.0),), sigma=50.0)
        with pytest.raises(ValueError):
            RoadNetwork(((0.0, 0.0, 1.0, 1.0),), sigma=0.0)


class TestSampleTargets:
    def test_uniform_counts_within_binomial_bounds(self):
        grid = GridSpec(100.0, 100.0, 10, 10)
        from areasearch.grid import full_field
        from areasearch.grid import scale_to_unit_mass
        prior = scale_to_unit_mass(full_field(grid, 1.0))
        rng = np.random.default_rng(50)
        n = 100_000
        pts = sample_targets(prior, n, rng)
        i = (pts[:, 0] // grid.dx).astype(int)
        j = (pts[:, 1] // grid.dy).astype(int)
        counts = np.bincount(j * 10 + i, minlength=100)
        p = 1.0 / 100.0
        bound = 4.0 * math.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) <= bound)

    def test_single_cell_support(self):
        grid = GridSpec(100.0, 100.0, 10, 10)
        v = np.zeros((10, 10))
        v[3, 7] = 1.0
        from areasearch.grid import ScalarField, scale_to_unit_mass
        prior = scale_to_unit_mass(ScalarField(grid, v))
        pts = sample_targets(prior, 500, np.random.default_rng(51))
        assert np.all((pts[:, 0] >= 70.0) & (pts[:, 0] <= 80.0))
        assert np.all((pts[:, 1] >= 30.0) & (pts[:, 1] <= 40.0))

    def test_zero_targets(self):
        grid = GridSpec(100.0, 100.0, 10, 10)
        from areasearch.grid import full_field, scale_to_unit_mass
        prior = scale_to_unit_mass(full_field(grid, 1.0))
        pts = sample_targets(prior, 0, np.random.default_rng(52))
        assert pts.shape == (0, 2)

    def test_seed_determinism(self):
        grid = GridSpec(100.0, 100.0, 10, 10)
        from areasearch.grid import full_field, scale_to_unit_mass
        prior = scale_to_unit_mass(full_field(grid, 1.0))
        a = sample_targets(prior, 100, np.random.default_rng(53))
        b = sample_targets(prior, 100, np.random.default_rng(53))
        assert np.array_equal(a, b)


class TestPresets:
    def test_test1_defaults(self):
        s = build_test_scenario("test1")
        assert s.grid == GridSpec(1000.0, 1000.0, 250, 250)
        assert len(s.fleet) == 5
        assert s.dt == 0.25 and s.t_end == 600.0
        assert s.controller.hedac.alpha == 0.03
        assert s.controller.hedac.beta == 4.0
        for a in s.fleet:
            assert a.v == 20.0 and a.r_turn == 30.0
            assert intensity(a.sensor) == pytest.approx(316.91, rel=0.01)

    def test_test1_pose_formula(self):
        s = build_test_scenario("test1")
        for i in range(1, 6):
            expect_x = 500.0 + 70.0 * i * math.cos((i - 1) * 2 * math.pi / 5)
            expect_y = 500.0 + 70.0 * i * math.sin((i - 1) * 2 * math.pi / 5)
            expect_th = (i - 1) * math.pi / 5 + math.pi
            a = s.fleet[i - 1]
            assert a.z[0] == expect_x
            assert a.z[1] == expect_y
            assert a.theta == expect_th

    def test_test2_defaults(self):
        s = build_test_scenario("test2")
        assert s.grid.dx == 5.0 and s.grid.dy == 5.0
        assert len(s.fleet) == 6
        assert s.dt == 0.5 and s.t_end == 1800.0
        assert s.controller.hedac.beta == 2.0
        poses = [(1000.0, 500.0, 0.0), (400.0, 1000.0, math.pi / 6),
                 (1500.0, 1000.0, math.pi / 3), (1500.0, 2000.0, math.pi / 2),
                 (2700.0, 2000.0, 2 * math.pi / 3),
                 (2300.0, 2600.0, 5 * math.pi / 6)]
        for a, (x, y, th) in zip(s.fleet, poses):
            assert (a.z[0], a.z[1], a.theta) == (x, y, th)
        speeds = [a.v for a in s.fleet]
        radii = [a.r_turn for a in s.fleet]
        assert speeds == [16.0, 16.0, 20.0, 20.0, 31.0, 31.0]
        assert radii == [26.0, 26.0, 29.0, 29.0, 43.0, 43.0]
        targets = (937.76, 937.76, 800.24, 800.24, 641.25, 641.25)
        for a, t in zip(s.fleet, targets):
            assert intensity(a.sensor) == pytest.approx(t, rel=0.01)

    def test_test3_defaults(self):
        s = build_test_scenario("test3")
        assert s.grid == GridSpec(4000.0, 2000.0, 800, 400)
        assert s.grid.dx == 5.0 and s.grid.dy == 5.0
        assert len(s.fleet) == 5
        assert s.t_end == 3000.0
        speeds = [a.v for a in s.fleet]
        assert speeds == [20.0, 20.0, 20.0, 34.0, 34.0]
        assert [a.r_turn for a in s.fleet] == [36.0, 36.0, 36.0, 48.0, 48.0]
        for a, t in zip(s.fleet, (1096.06,) * 3 + (1428.25,) * 2):
            assert intensity(a.sensor) == pytest.approx(t, rel=0.01)
        assert integrate(s.prior) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("n", [1, 3, 8, 20])
    def test_test1_fleet_replication(self, n):
        s = build_test_scenario("test1", n_agents=n)
        assert len(s.fleet) == n
        for a in s.fleet:
            assert a.v == 20.0 and a.r_turn == 30.0
            assert 0.0 <= a.z[0] <= 1000.0 and 0.0 <= a.z[1] <= 1000.0

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            build_test_scenario("test9")

    def test_replicate_fleet_keeps_parameters(self):
        s = build_test_scenario("test2", scale=0.25)
        out = replicate_fleet(s, 7)
        assert len(out.fleet) == 7
        for a in out.fleet:
            assert a.v == s.fleet[0].v
            assert a.sensor == s.fleet[0].sensor
            assert s.grid.contains(a.z)


class TestConfigRoundTrip:
    @pytest.mark.parametrize("which,scale", [("test1", 0.2), ("test2", 0.1),
                                             ("test3", 0.1)])
    def test_field_for_field(self, which, scale):
        s = build_test_scenario(which, scale=scale)
        cfg = scenario_to_config(s)
        # Through the actual text format, not just the dict.
        s2 = build_scenario(yaml.safe_load(yaml.safe_dump(cfg)))
        assert s2.grid == s.grid
        assert s2.dt == s.dt and s2.t_end == s.t_end
        assert s2.n_targets == s.n_targets and s2.seed == s.seed
        assert s2.controller == s.controller
        assert np.array_equal(s2.prior.values, s.prior.values)
        assert len(s2.fleet) == len(s.fleet)
        for a, b in zip(s.fleet, s2.fleet):
            assert np.array_equal(a.z, b.z)
            assert a.theta == b.theta and a.v == b.v and a.r_turn == b.r_turn
            assert a.sensor == b.sensor and a.model == b.model

    def test_overrides_apply(self):
        s = build_test_scenario("test1", scale=0.2,
                                overrides={"hedac.beta": 7.5,
                                           "controller.kind": "smc",
                                           "seed": 99})
        assert s.controller.hedac.beta == 7.5
        assert s.controller.kind == "smc"
        assert s.seed == 99

    def test_set_by_path_nested_creation(self):
        cfg = {}
        set_by_path(cfg, "a.b.c", 3)
        assert cfg == {"a": {"b": {"c": 3}}}

    def test_missing_key_diagnostic(self):
        cfg = scenario_to_config(build_test_scenario("test1", scale=0.2))
        del cfg["grid"]["nx"]
        with pytest.raises(ConfigError) as err:
            build_scenario(cfg)
        assert "grid.nx" in str(err.value)

    def test_bad_sensor_kind_diagnostic(self):
        cfg = scenario_to_config(build_test_scenario("test1", scale=0.2))
        cfg["fleet"][0]["sensor"]["kind"] = "lidar"
        with pytest.raises(ConfigError) as err:
            build_scenario(cfg)
        assert "sensor" in str(err.value)


class TestGeometryFiles:
    def test_circles_round_trip(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("# comment\n+ 10 20 5\n- 12 22 2\n\n+ 40 40 8\n")
        cs = load_circles(path)
        assert cs.minuends == ((10.0, 20.0, 5.0), (40.0, 40.0, 8.0))
        assert cs.subtrahends == ((12.0, 22.0, 2.0),)

    def test_roads_round_trip(self, tmp_path):
        path = tmp_path / "r.txt"
        path.write_text("0 0 10 0\n10 0 10 5 # spur\n")
        net = load_roads(path, sigma=3.0)
        assert net.segments == ((0.0, 0.0, 10.0, 0.0), (10.0, 0.0, 10.0, 5.0))

    def test_malformed_line_diagnostic(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("+ 1 2\n")
        with pytest.raises(ConfigError) as err:
            load_circles(path)
        assert ":1" in str(err.value)

    def test_geometry_file_reference_in_config(self, tmp_path):
        geo = tmp_path / "roads.txt"
        geo.write_text("100 100 300 120\n")
        cfg = scenario_to_config(build_test_scenario("test1", scale=0.2))
        cfg["prior"] = {"kind": "roads", "sigma": 30.0,
                        "geometry_file": "roads.txt"}
        s = build_scenario(cfg, base_dir=tmp_path)
        assert s.prior_spec["segments"] == [[100.0, 100.0, 300.0, 120.0]]
