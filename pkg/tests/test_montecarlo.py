import io

import numpy as np
import pytest

from eewsim.detection import DetectorParams, PhoneParams
from eewsim.errors import EmptyInput, NoDetections, NTooLarge
from eewsim.geo import GeoPoint, cell_center
from eewsim.montecarlo import (
    DensityGrid,
    GridSpec,
    McSummary,
    RunResult,
    detection_density,
    percentile,
    read_runs_csv,
    run_campaign,
    run_replica,
    summarize,
    worker_count,
    write_runs_csv,
    write_summary_csv,
)
from eewsim.network import Catalog
from eewsim.scenario import Earthquake, VelocityModel
from testutil import linear_percentile_oracle


def colocated_catalog(point, n):
    return Catalog(lats=np.full(n, point.lat), lons=np.full(n, point.lon))


def deterministic_setup(k=3):
    """p_detect 1, fixed delay, all phones on the epicenter: fully forced."""
    epi = GeoPoint(18.0, -72.0)
    eq = Earthquake(epicenter=epi, depth_km=0.0)
    cat = colocated_catalog(epi, k)
    pp = PhoneParams(p_detect=1.0, delay_lo_s=1.0, delay_hi_s=1.0)
    dp = DetectorParams(k_min=k, window_s=10.0)
    return cat, eq, VelocityModel(), pp, dp


class TestPercentile:
    def test_forced_by_definition(self):
        assert percentile([1, 2, 3, 4], 50) == 2.5

    def test_single_element(self):
        for p in (0, 2.5, 50, 97.5, 100):
            assert percentile([7.25], p) == 7.25

    def test_hand_rank_formula(self):
        assert percentile(list(range(100)), 2.5) == 2.475

    def test_extremes_are_min_max(self):
        rng = np.random.default_rng(2)
        vals = rng.normal(size=37).tolist()
        assert percentile(vals, 0) == min(vals)
        assert percentile(vals, 100) == max(vals)

    def test_matches_numpy_linear(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            vals = rng.normal(size=int(rng.integers(1, 40))).tolist()
            p = float(rng.uniform(0, 100))
            assert percentile(vals, p) == pytest.approx(
                linear_percentile_oracle(vals, p), rel=1e-12, abs=1e-12
            )

    def test_errors(self):
        with pytest.raises(EmptyInput):
            percentile([], 50)
        with pytest.raises(ValueError):
            percentile([1.0], 101)


class TestRunReplica:
    def test_fully_deterministic_composition(self):
        cat, eq, vm, pp, dp = deterministic_setup()
        res = run_replica(cat, eq, vm, pp, dp, n=3, replica=0, master_seed=1)
        assert res.detected
        assert res.delay_s == pytest.approx(1.0, abs=1e-12)
        assert res.distance_km == 0.0

    def test_p_detect_zero(self):
        cat, eq, vm, _, dp = deterministic_setup()
        res = run_replica(cat, eq, vm, PhoneParams(p_detect=0.0), dp, 3, 0, 1)
        assert not res.detected
        assert res.delay_s is None and res.distance_km is None

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        cat = Catalog(lats=rng.uniform(17, 20, 60), lons=rng.uniform(-74, -71, 60))
        eq = Earthquake(epicenter=GeoPoint(18.4, -72.5), depth_km=10.0)
        args = (cat, eq, VelocityModel(), PhoneParams(), DetectorParams(), 30, 4, 99)
        assert run_replica(*args) == run_replica(*args)

    def test_n_too_large_propagates(self):
        cat, eq, vm, pp, dp = deterministic_setup()
        with pytest.raises(NTooLarge):
            run_replica(cat, eq, vm, pp, dp, n=4, replica=0, master_seed=1)


class TestCampaign:
    def test_zero_width_bands_when_deterministic(self):
        cat, eq, vm, pp, dp = deterministic_setup()
        summaries, results = run_campaign(cat, eq, vm, pp, dp, [3], 20, 5)
        (s,) = summaries
        assert s.detect_rate == 1.0
        assert s.delay_lo_s == s.delay_mean_s == s.delay_hi_s
        assert s.dist_lo_km == s.dist_mean_km == s.dist_hi_km
        assert len(results) == 20

    def test_no_detections_summary(self):
        cat, eq, vm, _, dp = deterministic_setup()
        summaries, _ = run_campaign(cat, eq, vm, PhoneParams(p_detect=0.0), dp, [3], 5, 5)
        (s,) = summaries
        assert s.detect_rate == 0.0
        assert s.delay_mean_s is None and s.dist_mean_km is None

    def test_worker_count_does_not_change_results(self):
        rng = np.random.default_rng(8)
        cat = Catalog(lats=rng.uniform(17, 20, 200), lons=rng.uniform(-74, -71, 200))
        eq = Earthquake(epicenter=GeoPoint(18.4, -72.5), depth_km=10.0)
        args = (cat, eq, VelocityModel(), PhoneParams(), DetectorParams(), [20, 80], 30, 77)
        s1, r1 = run_campaign(*args, max_workers=1)
        s4, r4 = run_campaign(*args, max_workers=4)
        assert s1 == s4
        assert r1 == r4

    def test_bands_ordered(self):
        rng = np.random.default_rng(10)
        cat = Catalog(lats=rng.uniform(17, 20, 300), lons=rng.uniform(-74, -71, 300))
        eq = Earthquake(epicenter=GeoPoint(18.4, -72.5), depth_km=10.0)
        summaries, _ = run_campaign(
            cat, eq, VelocityModel(), PhoneParams(), DetectorParams(), [50, 150], 80, 3
        )
        for s in summaries:
            assert s.delay_lo_s <= s.delay_mean_s <= s.delay_hi_s
            assert s.dist_lo_km <= s.dist_mean_km <= s.dist_hi_km

    def test_band_estimates_converge_with_replicas(self):
        # Monte Carlo error of the band endpoints shrinks as replicas grow
        rng = np.random.default_rng(12)
        cat = Catalog(lats=rng.uniform(17.8, 19.2, 500), lons=rng.uniform(-73.2, -71.8, 500))
        eq = Earthquake(epicenter=GeoPoint(18.5, -72.5), depth_km=10.0)
        vm, pp, dp = VelocityModel(), PhoneParams(), DetectorParams()

        def band_lo(replicas, seed):
            s, _ = run_campaign(cat, eq, vm, pp, dp, [100], replicas, seed)
            return s[0].delay_lo_s

        reference = band_lo(4000, 1)
        err_small = abs(band_lo(100, 2) - reference)
        err_large = abs(band_lo(1000, 2) - reference)
        assert err_large < err_small

    def test_saturated_detection_rate_is_one(self):
        # p_detect 1, k_min <= n and a window wider than the delay spread
        # plus the P-arrival spread: every replica must detect
        rng = np.random.default_rng(20)
        cat = Catalog(lats=rng.uniform(18.0, 19.0, 150), lons=rng.uniform(-73.0, -72.0, 150))
        eq = Earthquake(epicenter=GeoPoint(18.5, -72.5), depth_km=10.0)
        summaries, _ = run_campaign(
            cat, eq, VelocityModel(), PhoneParams(p_detect=1.0),
            DetectorParams(k_min=5, window_s=60.0), [5, 40], 50, 2,
        )
        assert all(s.detect_rate == 1.0 for s in summaries)

    def test_delay_decreases_with_n_radial_scenario(self):
        rng = np.random.default_rng(14)
        # phones uniform on a disc around the epicenter
        r = np.sqrt(rng.uniform(0, 1, 800)) * 0.8
        th = rng.uniform(0, 2 * np.pi, 800)
        cat = Catalog(lats=18.5 + r * np.sin(th), lons=-72.5 + r * np.cos(th))
        eq = Earthquake(epicenter=GeoPoint(18.5, -72.5), depth_km=10.0)
        summaries, _ = run_campaign(
            cat, eq, VelocityModel(), PhoneParams(), DetectorParams(), [50, 200, 700], 150, 21
        )
        delays = [s.delay_mean_s for s in summaries]
        assert delays[0] > delays[1] > delays[2]


class TestDetectionDensity:
    def spec(self):
        return GridSpec(ncols=10, nrows=8, xll=-73.0, yll=18.0, cellsize=0.1)

    def detected(self, lat, lon, n=300, replica=0):
        return RunResult(
            n=n, replica=replica, detected=True, delay_s=3.0, distance_km=1.0,
            detection_location=GeoPoint(lat, lon),
        )

    def test_point_mass_mode(self):
        results = [self.detected(18.55, -72.45, replica=i) for i in range(5)]
        dg = detection_density(results, self.spec(), bandwidth_deg=0.05)
        assert dg.mode == GeoPoint(18.55, -72.45)

    def test_normalization(self):
        rng = np.random.default_rng(16)
        results = [
            self.detected(rng.uniform(18.1, 18.7), rng.uniform(-72.9, -72.2), replica=i)
            for i in range(40)
        ]
        dg = detection_density(results, self.spec())
        mass = dg.grid.values.sum() * dg.grid.cell_area_deg2
        assert 0.999 <= mass <= 1.001

    def test_two_cluster_mode_in_heavy_cluster(self):
        results = [self.detected(18.25, -72.75, replica=i) for i in range(90)]
        results += [self.detected(18.65, -72.15, replica=90 + i) for i in range(10)]
        dg = detection_density(results, self.spec(), bandwidth_deg=0.05)
        assert dg.mode == GeoPoint(18.25, -72.75)

    def test_mode_tie_breaks_to_first_row_major_cell(self):
        # one detection exactly on a 4-cell corner: 4 equal-density cells
        spec = GridSpec(ncols=4, nrows=4, xll=0.0, yll=0.0, cellsize=1.0)
        results = [self.detected(2.0, 2.0)]
        dg = detection_density(results, spec, bandwidth_deg=0.7)
        assert dg.mode == cell_center(dg.grid, 1, 1)

    def test_mode_invariant_under_rescaling(self):
        rng = np.random.default_rng(18)
        results = [
            self.detected(rng.uniform(18.1, 18.7), rng.uniform(-72.9, -72.2), replica=i)
            for i in range(25)
        ]
        a = detection_density(results, self.spec(), bandwidth_deg=0.08)
        b = detection_density(results, self.spec(), bandwidth_deg=0.08)
        assert a.mode == b.mode
        flat = np.argmax(a.grid.values)
        assert flat == np.argmax(a.grid.values * 1000.0)

    def test_no_detections(self):
        undetected = RunResult(n=300, replica=0, detected=False)
        with pytest.raises(NoDetections):
            detection_density([undetected], self.spec())

    def test_degenerate_bandwidth_falls_back(self):
        results = [self.detected(18.55, -72.45)]
        dg = detection_density(results, self.spec())
        assert dg.bandwidth_deg == self.spec().cellsize


class TestCsvRoundTrip:
    def test_runs_csv(self):
        results = [
            RunResult(n=10, replica=0, detected=True, delay_s=3.25, distance_km=7.5,
                      detection_location=GeoPoint(18.123456789, -72.987654321)),
            RunResult(n=10, replica=1, detected=False),
        ]
        buf = io.StringIO()
        write_runs_csv(buf, results)
        assert read_runs_csv(buf.getvalue()) == results

    def test_summary_csv_header_and_blanks(self):
        s = McSummary(n=5, replicas=3, detect_rate=0.0,
                      delay_mean_s=None, delay_lo_s=None, delay_hi_s=None,
                      dist_mean_km=None, dist_lo_km=None, dist_hi_km=None)
        buf = io.StringIO()
        write_summary_csv(buf, [s])
        lines = buf.getvalue().splitlines()
        assert lines[0].startswith("n,replicas,detect_rate")
        assert lines[1] == "5,3,0.0,,,,,,"

    def test_rejects_foreign_file(self):
        with pytest.raises(ValueError):
            read_runs_csv("a,b\n1,2\n")


class TestWorkerCount:
    def test_explicit_wins(self):
        assert worker_count(3) == 3

    def test_env_var(self, monkeypatch):
        monkeypatch.setenv("EEWSIM_THREADS", "6")
        assert worker_count() == 6
        monkeypatch.setenv("EEWSIM_THREADS", "bogus")
        with pytest.raises(ValueError):
            worker_count()

    def test_default_serial(self, monkeypatch):
        monkeypatch.delenv("EEWSIM_THREADS", raising=False)
        assert worker_count() == 1


class TestSummarize:
    def test_replica_order_independent(self):
        results = [
            RunResult(n=3, replica=i, detected=True, delay_s=float(i), distance_km=float(i),
                      detection_location=GeoPoint(18, -72))
            for i in range(10)
        ]
        forward = summarize(3, results)
        assert summarize(3, list(reversed(results))) == forward
