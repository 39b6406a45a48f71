"""Finite-m experiments on conjugacy-class spheres.

Populations are either enumerated exactly or drawn uniformly in
fixed-size chunks, each chunk with its own generator spawned from the
master seed, so results do not depend on how the work is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erf

from .conjugacy import (
    ConjugacyClass,
    EnumerationCapError,
    class_sphere_array,
    sample_class_sphere_array,
)
from .symbolic import WeightFunction, birkhoff_array
from .thermo import lambda_, sigma2
from .words import sample_sphere_array, sphere_array, sphere_size

CHUNK = 100_000
MIN_SAMPLED = 1000
DEGENERACY_THRESHOLD = 1e-8


class DegenerateWeightError(ValueError):
    """sigma^2 vanishes: the weight is cohomologous to a constant."""


@dataclass(frozen=True)
class Sample:
    values: np.ndarray
    n: int
    mode: str
    count: int
    seed: int | None = None
    words: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("empty sample")


@dataclass(frozen=True)
class EmpiricalSummary:
    mean: float
    variance: float
    third_abs_moment: float  # standardized


def summarize(values: np.ndarray) -> EmpiricalSummary:
    v = np.asarray(values, dtype=float)
    N = len(v)
    mean = math.fsum(v) / N
    c = v - mean
    var = math.fsum(c * c) / N
    third = math.fsum(np.abs(c) ** 3) / N / var**1.5 if var > 0 else 0.0
    return EmpiricalSummary(mean, var, third)


def _sampled_rows(draw, count: int, seed: int) -> np.ndarray:
    n_chunks = -(-count // CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    parts = []
    for i, ss in enumerate(seqs):
        size = min(CHUNK, count - i * CHUNK)
        parts.append(draw(size, np.random.default_rng(ss)))
    return np.concatenate(parts, axis=0)


def _check_mode(mode: str, count: int | None) -> None:
    if mode == "sampled":
        if count is None or count < MIN_SAMPLED:
            raise ValueError(f"sampled mode needs count >= {MIN_SAMPLED}")
    elif mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")


def collect_class_sample(C: ConjugacyClass, f: WeightFunction, m: int, mode: str = "exact",
                         count: int | None = None, seed: int = 0,
                         cap: int = 10**7, keep_words: bool = False) -> Sample:
    """F(x) for x in C_{k+2m}, enumerated or drawn uniformly."""
    _check_mode(mode, count)
    if mode == "exact":
        arr = class_sphere_array(C, m, cap=cap)
        vals = birkhoff_array(f, arr)
        return Sample(vals, C.k + 2 * m, mode, len(vals), None, arr if keep_words else None)
    arr = _sampled_rows(lambda size, rng: sample_class_sphere_array(C, m, size, rng), count, seed)
    vals = birkhoff_array(f, arr)
    return Sample(vals, C.k + 2 * m, mode, count, seed, arr if keep_words else None)


def collect_sphere_sample(p: int, f: WeightFunction, n: int, mode: str = "exact",
                          count: int | None = None, seed: int = 0,
                          cap: int = 10**7, keep_words: bool = False) -> Sample:
    """F(x) for x in Gamma_n."""
    _check_mode(mode, count)
    if mode == "exact":
        if sphere_size(p, n) > cap:
            raise EnumerationCapError(
                f"enumeration cap exceeded: {sphere_size(p, n)} elements > cap {cap}"
            )
        arr = sphere_array(p, n)
        vals = birkhoff_array(f, arr)
        return Sample(vals, n, mode, len(vals), None, arr if keep_words else None)
    arr = _sampled_rows(lambda size, rng: sample_sphere_array(p, n, size, rng), count, seed)
    vals = birkhoff_array(f, arr)
    return Sample(vals, n, mode, count, seed, arr if keep_words else None)


@dataclass(frozen=True)
class MeanRow:
    m: int
    mean: float  # average of F(x)/(k+2m)
    discrepancy: float


@dataclass(frozen=True)
class MeanConvergence:
    lam: float
    rows: list[MeanRow]


def mean_convergence(C: ConjugacyClass, f: WeightFunction, m_list: Sequence[int],
                     mode: str = "exact", count: int | None = None, seed: int = 0,
                     cap: int = 10**7) -> MeanConvergence:
    m_list = list(m_list)
    if not m_list or m_list != sorted(m_list):
        raise ValueError("m_list must be non-empty and ascending")
    lam = lambda_(f)
    rows = []
    for m in m_list:
        s = collect_class_sample(C, f, m, mode, count, seed, cap)
        mean = summarize(s.values).mean / s.n
        rows.append(MeanRow(m, mean, abs(mean - lam)))
    return MeanConvergence(lam, rows)


def normal_cdf(y, mean: float = 0.0, variance: float = 1.0):
    """Normal CDF through erf (double precision, far inside the 1e-7 budget)."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    z = (np.asarray(y, dtype=float) - mean) / math.sqrt(2.0 * variance)
    out = 0.5 * (1.0 + erf(z))
    return float(out) if np.ndim(out) == 0 else out


def ks_statistic(sample, mean: float, variance: float) -> float:
    """Two-sided sup distance between the empirical CDF and N(mean, variance)."""
    x = np.sort(np.asarray(sample, dtype=float))
    N = len(x)
    if N == 0:
        raise ValueError("empty sample")
    Phi = normal_cdf(x, mean, variance)
    i = np.arange(1, N + 1)
    return float(max(np.max(np.abs(i / N - Phi)), np.max(np.abs(Phi - (i - 1) / N))))


def _nondegenerate_sigma2(f: WeightFunction) -> float:
    s2 = sigma2(f)
    if s2 <= DEGENERACY_THRESHOLD:
        raise DegenerateWeightError(
            f"degenerate weight: sigma^2 = {s2:.3g} (cohomologous to a constant)"
        )
    return s2


def standardize(sample: Sample, lam: float) -> np.ndarray:
    return (sample.values - sample.n * lam) / math.sqrt(sample.n)


@dataclass(frozen=True)
class CLTResult:
    ks: float
    target_mean: float
    target_variance: float
    n: int
    grid: np.ndarray = field(repr=False)
    empirical_cdf: np.ndarray = field(repr=False)
    reference_cdf: np.ndarray = field(repr=False)
    summary: EmpiricalSummary | None = None


def _clt(z: np.ndarray, n: int, variance: float, grid) -> CLTResult:
    if grid is None:
        sd = math.sqrt(variance)
        grid = np.linspace(-4 * sd, 4 * sd, 81)
    grid = np.asarray(grid, dtype=float)
    zs = np.sort(z)
    emp = np.searchsorted(zs, grid, side="right") / len(zs)
    ref = normal_cdf(grid, 0.0, variance)
    return CLTResult(ks_statistic(z, 0.0, variance), 0.0, variance, n, grid, emp,
                     np.atleast_1d(ref), summarize(z))


def clt_experiment(C: ConjugacyClass, f: WeightFunction, m: int, mode: str = "exact",
                   count: int | None = None, seed: int = 0, grid=None,
                   cap: int = 10**7) -> CLTResult:
    """Standardize F over C_{k+2m} at the spectral drift and compare to N(0, 2 sigma^2)."""
    s2 = _nondegenerate_sigma2(f)
    s = collect_class_sample(C, f, m, mode, count, seed, cap)
    return _clt(standardize(s, lambda_(f)), s.n, 2 * s2, grid)


def sphere_clt_experiment(p: int, f: WeightFunction, n: int, mode: str = "sampled",
                          count: int | None = None, seed: int = 0, grid=None,
                          cap: int = 10**7) -> CLTResult:
    """The unrestricted counterpart over Gamma_n, against N(0, sigma^2)."""
    s2 = _nondegenerate_sigma2(f)
    s = collect_sphere_sample(p, f, n, mode, count, seed, cap)
    return _clt(standardize(s, lambda_(f)), s.n, s2, grid)


@dataclass(frozen=True)
class VarianceRatio:
    n: int
    var_class: float
    var_sphere: float

    @property
    def ratio(self) -> float:
        return self.var_class / self.var_sphere


def variance_ratio(C: ConjugacyClass, f: WeightFunction, m: int, mode: str = "exact",
                   count: int | None = None, seed: int = 0,
                   sphere_mode: str = "sampled", sphere_count: int | None = None,
                   cap: int = 10**7) -> VarianceRatio:
    """Var of F over C_{k+2m} divided by Var of F over Gamma_{k+2m}."""
    _nondegenerate_sigma2(f)
    sc = collect_class_sample(C, f, m, mode, count, seed, cap)
    ss = collect_sphere_sample(C.p, f, sc.n, sphere_mode,
                               sphere_count if sphere_count is not None else count,
                               seed + 1, cap)
    return VarianceRatio(sc.n, summarize(sc.values).variance, summarize(ss.values).variance)


@dataclass(frozen=True)
class CharFnRow:
    t: float
    phi: complex
    deviation: float


def characteristic_function(C: ConjugacyClass, f: WeightFunction, m: int,
                            t_list: Sequence[float], mode: str = "exact",
                            count: int | None = None, seed: int = 0,
                            cap: int = 10**7) -> list[CharFnRow]:
    """phi_m(t) over C_{k+2m} and its distance to exp(-sigma^2 t^2)."""
    s2 = _nondegenerate_sigma2(f)
    s = collect_class_sample(C, f, m, mode, count, seed, cap)
    z = standardize(s, lambda_(f))
    rows = []
    for t in t_list:
        e = np.exp(1j * t * z)
        phi = complex(math.fsum(e.real) / len(z), math.fsum(e.imag) / len(z))
        rows.append(CharFnRow(float(t), phi, abs(phi - math.exp(-s2 * t * t))))
    return rows
