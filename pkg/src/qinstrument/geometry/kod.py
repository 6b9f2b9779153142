"""Haar-relative histograms of Kraus-operator coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import InvalidArgumentError

__all__ = ["KodHistogram", "kod_histogram", "merge_histograms"]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass
class KodHistogram:
    """Monte Carlo mass per bin divided by the Haar measure of the bin.

    Attributes
    ----------
    axes : dict
        Coordinate name to bin edges.
    mass : ndarray
        Summed weights per bin.
    haar : ndarray
        Haar measure of each bin.
    counts : ndarray
        Raw hits per bin.
    total_weight : float
        Summed weights of all accepted samples, in range or not.
    """

    axes: dict
    mass: np.ndarray
    haar: np.ndarray
    counts: np.ndarray
    total_weight: float

    @property
    def weights(self) -> np.ndarray:
        """Haar-relative density per bin, unnormalized."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.haar > 0, self.mass / self.haar, 0.0)

    def density(self) -> np.ndarray:
        """Haar-relative density normalized by ``total_weight``."""
        return self.weights / self.total_weight

    def centers(self, name):
        e = self.axes[name]
        return (e[1:] + e[:-1]) / 2


def _axis_measure(edges, density):
    if density is None:
        return np.diff(edges)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = (hi + lo) / 2 + (hi - lo) / 2 * _GL_X[None, :]
    return np.sum(density(x) * _GL_W[None, :], axis=1) * (hi[:, 0] - lo[:, 0]) / 2


def kod_histogram(coords: dict, bins: dict, weights=None, haar: dict | None = None) -> KodHistogram:
    """Histogram coordinates relative to a product-form Haar measure.

    Parameters
    ----------
    coords : dict
        Name to 1-D sample array; all arrays share a length.
    bins : dict
        Name to bin edges (or a bin count over the sample range).
    weights : ndarray, optional
        Per-sample weights, for instance ``e^{-2ℓ}``.
    haar : dict, optional
        Name to 1-D Haar density along that axis (e.g. ``sinh²``);
        missing axes use the flat measure.
    """
    names = list(bins)
    if not names:
        raise InvalidArgumentError("no axes given")
    samples = [np.asarray(coords[n], dtype=float) for n in names]
    n = len(samples[0])
    if n == 0:
        raise InvalidArgumentError("empty ensemble")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0) or len(w) != n:
        raise InvalidArgumentError("weights must be non-negative and match the samples")
    edges = []
    for name, x in zip(names, samples):
        b = bins[name]
        edges.append(np.histogram_bin_edges(x, bins=b) if np.isscalar(b) else np.asarray(b, dtype=float))
    mass, _ = np.histogramdd(np.stack(samples, axis=1), bins=edges, weights=w)
    counts, _ = np.histogramdd(np.stack(samples, axis=1), bins=edges)
    haar = haar or {}
    measure = np.ones(())
    for name, e in zip(names, edges):
        measure = np.multiply.outer(measure, _axis_measure(e, haar.get(name)))
    return KodHistogram(dict(zip(names, edges)), mass, measure, counts.astype(int), float(w.sum()))


def merge_histograms(parts) -> KodHistogram:
    """Combine partial histograms on identical bins, in the given order."""
    parts = list(parts)
    if not parts:
        raise InvalidArgumentError("nothing to merge")
    first = parts[0]
    for p in parts[1:]:
        if p.axes.keys() != first.axes.keys() or any(
            not np.array_equal(p.axes[k], first.axes[k]) for k in first.axes
        ):
            raise InvalidArgumentError("histograms have different bins")
    return KodHistogram(
        first.axes,
        sum(p.mass for p in parts),
        first.haar,
        sum(p.counts for p in parts),
        float(sum(p.total_weight for p in parts)),
    )
