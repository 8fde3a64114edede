"""Ensemble statistics: KS distances, bootstrap bands, simple OLS."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp


def ks_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(ks_2samp(a, b).statistic)


def _resample(r: np.random.Generator, x: np.ndarray) -> np.ndarray:
    return x[r.integers(0, len(x), size=len(x))]


def ks_bootstrap_se(a: np.ndarray, b: np.ndarray, n_resamples: int = 200, seed: int = 0) -> float:
    """Bootstrap standard error of the two-sample KS statistic."""
    r = np.random.default_rng(seed)
    stats = [ks_distance(_resample(r, a), _resample(r, b)) for _ in range(n_resamples)]
    return float(np.std(stats, ddof=1))


def ks_null_band(a: np.ndarray, b: np.ndarray, n_resamples: int = 200, seed: int = 0,
                 quantile: float = 0.95) -> float:
    """Permutation-null upper band for KS between samples of these sizes."""
    pooled = np.concatenate([a, b])
    r = np.random.default_rng(seed)
    na = len(a)
    stats = []
    for _ in range(n_resamples):
        perm = r.permutation(pooled)
        stats.append(ks_distance(perm[:na], perm[na:]))
    return float(np.quantile(stats, quantile))


@dataclass(frozen=True)
class OlsFit:
    names: list
    coefficients: np.ndarray
    standard_errors: np.ndarray

    @property
    def t_stats(self) -> np.ndarray:
        return self.coefficients / self.standard_errors


def ols(design: np.ndarray, target: np.ndarray, names=None) -> OlsFit:
    coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    dof = max(len(target) - design.shape[1], 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return OlsFit(
        names=list(names) if names else [f"b{i}" for i in range(design.shape[1])],
        coefficients=coef,
        standard_errors=np.sqrt(np.diag(cov)),
    )


def summary_stats(x: np.ndarray) -> dict:
    """Mean/variance/quantiles with the standard error of the mean."""
    qs = np.quantile(x, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {
        "n": len(x),
        "mean": float(np.mean(x)),
        "variance": float(np.var(x, ddof=1)),
        "se_mean": float(np.std(x, ddof=1) / np.sqrt(len(x))),
        "q05": float(qs[0]),
        "q25": float(qs[1]),
        "median": float(qs[2]),
        "q75": float(qs[3]),
        "q95": float(qs[4]),
    }
