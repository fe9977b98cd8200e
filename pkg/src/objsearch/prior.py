"""Frozen prior map over the plane: a Gaussian mixture seeded by anchor objects.

Each anchor contributes one isotropic component whose weight comes from a
commonsense association score between the target category and the anchor
(category similarity + spatial-context similarity, gated by observation
confidence). The mixture is discretized onto the scenario grid as a
probability-mass raster plus its per-cell entropy contributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .world import Anchor, OccupancyGrid, Point, Scenario


class EmbeddingLookupError(KeyError):
    """A label was requested that the embedding table does not contain."""

    def __init__(self, label: str):
        super().__init__(label)
        self.label = label

    def __str__(self) -> str:
        return f"label {self.label!r} not found in embedding table"


class DegeneratePriorError(ValueError):
    """All association scores vanished; no usable prior can be built."""


@dataclass(frozen=True)
class EmbeddingTable:
    """Label -> vector lookup; missing labels raise, never zero-fill."""

    dimension: int
    entries: dict[str, np.ndarray]

    def vector(self, label: str) -> np.ndarray:
        try:
            return self.entries[label]
        except KeyError:
            raise EmbeddingLookupError(label) from None

    def __contains__(self, label: str) -> bool:
        return label in self.entries


def load_embedding_table(path: str | Path) -> EmbeddingTable:
    """Parse a whitespace-separated embedding file.

    One record per line: label followed by the vector components. A leading
    header line of two integers (count, dimension) is tolerated so that
    Numberbatch-style exports load unchanged.
    """
    entries: dict[str, np.ndarray] = {}
    dimension = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue
                except ValueError:
                    pass
            label = parts[0]
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError as e:
                raise ValueError(f"line {lineno}: bad component for {label!r}: {e}") from e
            if vec.size == 0:
                raise ValueError(f"line {lineno}: no components for label {label!r}")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"line {lineno}: non-finite component for label {label!r}")
            if float(np.linalg.norm(vec)) == 0.0:
                raise ValueError(f"line {lineno}: zero-norm vector for label {label!r}")
            if dimension == 0:
                dimension = vec.size
            elif vec.size != dimension:
                raise ValueError(
                    f"line {lineno}: label {label!r} has {vec.size} components, expected {dimension}"
                )
            vec.flags.writeable = False
            entries[label] = vec
    if not entries:
        raise ValueError(f"embedding file {path} holds no records")
    return EmbeddingTable(dimension=dimension, entries=entries)


@lru_cache(maxsize=1)
def bundled_embedding_table() -> EmbeddingTable:
    """The toy table shipped with the package (16-dim, hand-grouped categories)."""
    from importlib.resources import files

    return load_embedding_table(str(files("objsearch").joinpath("data/embeddings_toy.txt")))


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """u.v / (|u||v|), clamped into [-1, 1] against rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"vector lengths differ: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm input")
    return min(1.0, max(-1.0, float(np.dot(u, v)) / (nu * nv)))


def spatial_context_vector(anchor: Anchor, table: EmbeddingTable) -> np.ndarray | None:
    """Normalized mean of the context-label embeddings; None when no context."""
    if not anchor.context_labels:
        return None
    vecs = [table.vector(label) for label in anchor.context_labels]
    mean = np.mean(vecs, axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        return None
    return mean / norm


def association_score(target: str, anchor: Anchor, table: EmbeddingTable) -> float:
    """confidence * exp(sim(target, category) + sim(target, spatial context)).

    An anchor without context contributes no spatial-context similarity.
    Strictly positive whenever confidence > 0; exactly 0 when confidence is 0.
    """
    if anchor.confidence == 0.0:
        return 0.0
    v_target = table.vector(target)
    sim_cat = cosine_similarity(v_target, table.vector(anchor.category))
    v_space = spatial_context_vector(anchor, table)
    sim_space = 0.0 if v_space is None else cosine_similarity(v_target, v_space)
    return anchor.confidence * math.exp(sim_cat + sim_space)


@dataclass(frozen=True)
class IGMConfig:
    # sigma_k = spread_factor * footprint_radius; isotropic by construction
    spread_factor: float = 1.5


@dataclass(frozen=True, eq=False)
class IGMModel:
    """Frozen Gaussian-mixture prior plus its discretized rasters.

    weights/means/covs hold the K mixture components; mass_raster is the
    per-cell probability mass (sums to 1 over free cells), entropy_raster its
    -p*log2(p) contributions, prior_target_point the argmax free-cell center.
    """

    grid: OccupancyGrid
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    mass_raster: np.ndarray
    entropy_raster: np.ndarray
    prior_target_point: Point
    _inv_covs: np.ndarray = field(repr=False, default=None)
    _norms: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise ValueError("mixture weights must sum to 1 within 1e-9")
        if np.any(self.weights < 0):
            raise ValueError("mixture weights must be nonnegative")
        for k, cov in enumerate(self.covs):
            if not np.allclose(cov, cov.T):
                raise ValueError(f"covariance {k} is not symmetric")
            eigvals = np.linalg.eigvalsh(cov)
            if np.any(eigvals <= 0):
                raise ValueError(f"covariance {k} is not positive-definite")
        if abs(float(self.mass_raster.sum()) - 1.0) > 1e-6:
            raise ValueError("mass raster must sum to 1 within 1e-6")
        if np.any(self.entropy_raster < 0):
            raise ValueError("entropy raster must be elementwise nonnegative")
        object.__setattr__(self, "_inv_covs", np.linalg.inv(self.covs))
        object.__setattr__(
            self,
            "_norms",
            1.0 / (2.0 * math.pi * np.sqrt(np.linalg.det(self.covs))),
        )
        for arr in (
            self.weights,
            self.means,
            self.covs,
            self.mass_raster,
            self.entropy_raster,
            self._inv_covs,
            self._norms,
        ):
            arr.flags.writeable = False

    @property
    def components(self) -> list[tuple[float, Point, np.ndarray]]:
        return [
            (float(w), (float(m[0]), float(m[1])), c)
            for w, m, c in zip(self.weights, self.means, self.covs)
        ]


def entropy_of_mass(mass: np.ndarray) -> np.ndarray:
    """Elementwise -p*log2(p) with the 0*log(0) = 0 convention."""
    out = np.zeros_like(mass)
    pos = mass > 0
    out[pos] = -mass[pos] * np.log2(mass[pos])
    return out


def _mixture_density(
    weights: np.ndarray,
    means: np.ndarray,
    inv_covs: np.ndarray,
    norms: np.ndarray,
    points: np.ndarray,
) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    total = np.zeros(pts.shape[0])
    for w, mu, inv, norm in zip(weights, means, inv_covs, norms):
        diff = pts - mu
        quad = np.einsum("ni,ij,nj->n", diff, inv, diff)
        total += w * norm * np.exp(-0.5 * quad)
    return total


def density_at_points(model: IGMModel, points: np.ndarray) -> np.ndarray:
    """Mixture density evaluated at an (N, 2) array of plane points."""
    return _mixture_density(model.weights, model.means, model._inv_covs, model._norms, points)


def density_at(model: IGMModel, x: Point) -> float:
    """Exact mixture density at one point; defined on the whole plane."""
    return float(density_at_points(model, np.array([x]))[0])


def build_igm(
    scenario: Scenario, table: EmbeddingTable, config: IGMConfig | None = None
) -> IGMModel:
    """Construct the frozen prior from the scenario's anchor snapshot.

    Weights normalize the association scores; each covariance is
    (spread_factor * footprint_radius)^2 * I. The mass raster is the density
    at free-cell centers times the cell area, renormalized over free cells.
    """
    config = config or IGMConfig()
    anchors = scenario.anchors_at_T
    if not anchors:
        raise DegeneratePriorError("degenerate prior: scenario has no anchors")
    grid = scenario.grid
    for a in anchors:
        if not grid.in_bounds(grid.cell_of(a.position)):
            raise ValueError(f"anchor {a.id} lies outside the grid")

    scores = np.array(
        [association_score(scenario.target_category, a, table) for a in anchors]
    )
    total = float(scores.sum())
    if total <= 0.0:
        raise DegeneratePriorError("degenerate prior: all association scores are zero")
    weights = scores / total

    means = np.array([a.position for a in anchors], dtype=np.float64)
    sigmas = np.array(
        [config.spread_factor * a.footprint_radius for a in anchors], dtype=np.float64
    )
    covs = np.einsum("k,ij->kij", sigmas**2, np.eye(2))
    inv_covs = np.linalg.inv(covs)
    norms = 1.0 / (2.0 * math.pi * np.sqrt(np.linalg.det(covs)))

    xs, ys = grid.cell_centers()
    centers = np.stack([xs.ravel(), ys.ravel()], axis=1)
    density = _mixture_density(weights, means, inv_covs, norms, centers).reshape(
        grid.height, grid.width
    )
    free = grid.free_mask()
    mass = np.where(free, density * grid.resolution**2, 0.0)
    mass_total = float(mass.sum())
    if mass_total <= 0.0:
        raise DegeneratePriorError(
            "degenerate prior: no probability mass falls on free cells"
        )
    mass /= mass_total

    flat_argmax = int(np.argmax(mass))  # row-major scan: lowest (row, col) wins ties
    argmax_cell = (flat_argmax // grid.width, flat_argmax % grid.width)

    return IGMModel(
        grid=grid,
        weights=weights,
        means=means,
        covs=covs,
        mass_raster=mass,
        entropy_raster=entropy_of_mass(mass),
        prior_target_point=grid.center_of(argmax_cell),
    )
