"""Population-weighted warning-time distributions per intensity bin.

The warning time at a place is the S-wave arrival minus the alert time
(detection time plus dissemination latency). Negative values are
first-class: they mark the blind zone where shaking outruns the alert.

Weighted percentiles use the left-continuous inverse CDF: the smallest
warning time whose cumulative normalized population weight reaches the
requested fraction. Stated explicitly because weighted quantiles have
several conventions; this one degenerates to the plain inverse-CDF
empirical quantile under equal weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean
from typing import IO, Sequence

import numpy as np

from .detection import Detection
from .errors import EmptyBins, EmptyInput, NoDetections
from .geo import Grid, MmiBin, check_disjoint_bins, sample_values
from .montecarlo import DensityGrid, GridSpec, RunResult, detection_density, percentile
from .scenario import Earthquake, VelocityModel, s_arrivals_s


@dataclass(frozen=True)
class AlertParams:
    """Alert-side timing; latency 0 models instantaneous dissemination."""

    dissemination_latency_s: float = 0.0

    def __post_init__(self):
        if not self.dissemination_latency_s >= 0:
            raise ValueError(
                f"dissemination latency must be >= 0, got {self.dissemination_latency_s}"
            )


@dataclass(frozen=True)
class WarningStats:
    """Warning-time distribution for the population inside one MMI bin."""

    bin: MmiBin
    population: float
    p2_5_s: float | None
    mean_s: float | None
    p97_5_s: float | None
    histogram: tuple[tuple[float, float, float], ...]


@dataclass(frozen=True)
class WarningBand:
    """One (n, bin, statistic) row of the warning-vs-network-size table."""

    n: int
    bin: MmiBin
    stat: str  # 'p2_5' | 'mean' | 'p97_5'
    value_s: float | None
    band_lo_s: float | None
    band_hi_s: float | None


def weighted_percentile(values, weights, p: float) -> float:
    """Left-continuous inverse-CDF weighted percentile.

    Returns the smallest value whose cumulative normalized weight is
    >= p/100. Zero-weight entries are ignored.
    """
    if not 0.0 <= p <= 100.0:
        raise ValueError(f"percentile must be in [0, 100], got {p}")
    v = np.asarray(values, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if v.shape != w.shape or v.ndim != 1:
        raise ValueError("values and weights must be 1-D arrays of equal length")
    if (w < 0).any():
        raise ValueError("weights must be non-negative")
    keep = w > 0
    v, w = v[keep], w[keep]
    if v.size == 0:
        raise EmptyInput("weighted percentile of an empty collection")
    order = np.argsort(v, kind="stable")
    cum = np.cumsum(w[order])
    # compare cum/total >= p/100 as cum*100 >= total*p: single products keep
    # exact-boundary cases (equal weights, round p) bit-stable
    idx = min(int(np.searchsorted(cum * 100.0, cum[-1] * p, side="left")), v.size - 1)
    return float(v[order][idx])


def warning_field(
    det: Detection,
    eq: Earthquake,
    vm: VelocityModel,
    ap: AlertParams,
    pop: Grid,
) -> Grid:
    """Warning time at every population cell center, as a grid.

    w(x) = s_arrival(x) - detection_time - dissemination_latency; cells
    with nodata population stay nodata.
    """
    lat2, lon2 = pop.center_mesh()
    w = s_arrivals_s(eq, vm, lat2, lon2) - det.time_s - ap.dissemination_latency_s
    values = np.where(pop.mask, w, pop.nodata)
    return Grid(
        ncols=pop.ncols, nrows=pop.nrows,
        xll=pop.xll, yll=pop.yll,
        cellsize=pop.cellsize, nodata=pop.nodata,
        values=values,
    )


def _histogram(w: np.ndarray, pops: np.ndarray, width: float) -> tuple[tuple[float, float, float], ...]:
    """Fixed-width histogram aligned to multiples of ``width``.

    Buckets are contiguous from the lowest to the highest occupied bucket;
    bucket populations sum to exactly the same total the stats use.
    """
    k = np.floor(w / width).astype(np.int64)
    k_min = int(k.min())
    counts = np.bincount(k - k_min, weights=pops)
    return tuple(
        ((k_min + i) * width, (k_min + i + 1) * width, float(c))
        for i, c in enumerate(counts.tolist())
    )


def _bin_stats(bin_: MmiBin, w: np.ndarray, pops: np.ndarray, hist_width_s: float) -> WarningStats:
    if w.size == 0:
        return WarningStats(
            bin=bin_, population=0.0, p2_5_s=None, mean_s=None, p97_5_s=None, histogram=(),
        )
    hist = _histogram(w, pops, hist_width_s)
    population = float(sum(h[2] for h in hist))
    return WarningStats(
        bin=bin_,
        population=population,
        p2_5_s=weighted_percentile(w, pops, 2.5),
        mean_s=float(np.average(w, weights=pops)),
        p97_5_s=weighted_percentile(w, pops, 97.5),
        histogram=hist,
    )


def _bin_selections(
    mmi: Grid, pop: Grid, bins: Sequence[MmiBin]
) -> list[tuple[MmiBin, np.ndarray]]:
    """Per-bin boolean masks over the population grid (row-major, 2-D).

    A cell participates when it has positive population and its center
    falls on a valid cell of the intensity grid.
    """
    if not bins:
        raise EmptyBins("need at least one intensity bin")
    check_disjoint_bins(bins)
    lat2, lon2 = pop.center_mesh()
    samples = sample_values(mmi, lat2, lon2)
    usable = pop.mask & (pop.values > 0) & np.isfinite(samples)
    return [(b, usable & b.contains(samples)) for b in bins]


def warning_stats(
    w: Grid,
    mmi: Grid,
    pop: Grid,
    bins: Sequence[MmiBin],
    hist_width_s: float = 1.0,
) -> list[WarningStats]:
    """Population-weighted warning-time statistics per intensity bin.

    Cells are assigned to the bin containing their sampled intensity;
    cells with nodata intensity or zero population are excluded. A bin
    with no matching population yields population 0 and absent statistics.
    """
    if (w.ncols, w.nrows, w.xll, w.yll, w.cellsize) != (
        pop.ncols, pop.nrows, pop.xll, pop.yll, pop.cellsize
    ):
        raise ValueError("warning field and population grid must share geometry")
    if not hist_width_s > 0:
        raise ValueError(f"hist_width_s must be > 0, got {hist_width_s}")
    out = []
    for b, sel in _bin_selections(mmi, pop, bins):
        sel = sel & w.mask
        out.append(_bin_stats(b, w.values[sel], pop.values[sel], hist_width_s))
    return out


def warning_vs_n(
    results: Sequence[RunResult],
    eq: Earthquake,
    vm: VelocityModel,
    ap: AlertParams,
    mmi: Grid,
    pop: Grid,
    bins: Sequence[MmiBin],
) -> list[WarningBand]:
    """Warning summaries per network size with replica-spread bands.

    For each detected replica the three warning statistics are computed
    with that replica's detection time; rows carry their mean over
    replicas plus empirical 2.5/97.5 percentile bands across replicas.
    An n with no detections (or a bin with no population) yields rows with
    absent values.
    """
    selections = _bin_selections(mmi, pop, bins)
    lat2, lon2 = pop.center_mesh()
    s_arr = s_arrivals_s(eq, vm, lat2, lon2)
    per_bin = [(b, s_arr[sel], pop.values[sel]) for b, sel in selections]

    n_order: list[int] = []
    times_by_n: dict[int, list[float]] = {}
    for r in results:
        if r.n not in times_by_n:
            n_order.append(r.n)
            times_by_n[r.n] = []
        if r.detected:
            times_by_n[r.n].append(eq.origin_time_s + r.delay_s)

    stats = ("p2_5", "mean", "p97_5")
    rows: list[WarningBand] = []
    for n in n_order:
        times = times_by_n[n]
        for b, s_vals, pops in per_bin:
            if not times or s_vals.size == 0:
                for stat in stats:
                    rows.append(WarningBand(n, b, stat, None, None, None))
                continue
            samples: dict[str, list[float]] = {stat: [] for stat in stats}
            for t in times:
                wv = s_vals - t - ap.dissemination_latency_s
                samples["p2_5"].append(weighted_percentile(wv, pops, 2.5))
                samples["mean"].append(float(np.average(wv, weights=pops)))
                samples["p97_5"].append(weighted_percentile(wv, pops, 97.5))
            for stat in stats:
                vals = samples[stat]
                rows.append(
                    WarningBand(
                        n=n, bin=b, stat=stat,
                        value_s=fmean(vals),
                        band_lo_s=percentile(vals, 2.5),
                        band_hi_s=percentile(vals, 97.5),
                    )
                )
    return rows


def mode_conditioned_detection(
    results: Sequence[RunResult],
    n: int,
    eq: Earthquake,
    grid_spec: GridSpec,
    bandwidth_deg: float | None = None,
) -> tuple[Detection, DensityGrid]:
    """The 'expected detection' for one n: density mode + mean detection time.

    The detection location is the mode of the kernel density over the n's
    detected replicas; the detection time is the replica-mean detection
    time. Used for the single-detection warning histograms.
    """
    mine = [r for r in results if r.n == n]
    detected = [r for r in mine if r.detected]
    if not detected:
        raise NoDetections(f"no detected replica at n={n}")
    density = detection_density(mine, grid_spec, bandwidth_deg)
    mean_time = eq.origin_time_s + fmean(r.delay_s for r in detected)
    det = Detection(time_s=mean_time, location=density.mode, contributing=())
    return det, density


# --- CSV emission -------------------------------------------------------------

def write_warning_hist_csv(stream: IO[str], stats: Sequence[WarningStats]) -> None:
    """Histogram rows per bin; an empty bin emits a single population-0 row."""
    stream.write("bin,edge_lo_s,edge_hi_s,population\n")
    for ws in stats:
        if not ws.histogram:
            stream.write(f'"{ws.bin}",,,{repr(0.0)}\n')
            continue
        for lo, hi, p in ws.histogram:
            stream.write(f'"{ws.bin}",{repr(float(lo))},{repr(float(hi))},{repr(float(p))}\n')


def write_warning_vs_n_csv(stream: IO[str], rows: Sequence[WarningBand]) -> None:
    stream.write("n,bin,stat,value_s,band_lo_s,band_hi_s\n")
    for r in rows:
        value = "" if r.value_s is None else repr(float(r.value_s))
        lo = "" if r.band_lo_s is None else repr(float(r.band_lo_s))
        hi = "" if r.band_hi_s is None else repr(float(r.band_hi_s))
        stream.write(f'{r.n},"{r.bin}",{r.stat},{value},{lo},{hi}\n')
