"""Weighted determinantal point process sampling.

The kernel couples per-pixel saliency u with a Gaussian location similarity:

    L[i, j] = u_i^gamma * exp(-((x_i-x_j)^2 + (y_i-y_j)^2) / sigma_s^2) * u_j^gamma

so gamma trades saliency against spatial diversity.  Exact sampling goes
through the spectral decomposition: eigenvectors are kept independently with
probability lambda/(lambda+1) (random-size draw) or by elementary-symmetric-
polynomial selection (fixed-size k-DPP), then items are drawn sequentially
from the induced projection process.

Full images are sampled tile by tile: an M x M image would need an M^2 x M^2
kernel, so the image is partitioned into T x T tiles, the pixel budget is
apportioned across tiles proportionally to their saliency mass, and each tile
is sampled independently with a seed derived from (seed, tile row, tile col).
"""

import hashlib
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .raster import Bitmap, ErrorMap

# eigenvalues below this are treated as exact zeros (numerical rank cut)
EIGENVALUE_CLAMP = 1e-10
# additive saliency floor: keeps kernels of near-zero-saliency regions from
# collapsing to numerical rank 0 when gamma > 0
SALIENCY_FLOOR = 1e-6


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric WDPP kernel over a set of pixel positions."""

    entries: np.ndarray
    coords: np.ndarray
    gamma: float
    sigma_s: float

    def __post_init__(self):
        entries = np.ascontiguousarray(np.asarray(self.entries, dtype=np.float64))
        coords = np.ascontiguousarray(np.asarray(self.coords, dtype=np.float64))
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValidationError(f"kernel must be square, got shape {entries.shape}")
        if entries.shape[0] == 0:
            raise ValidationError("kernel must contain at least one item")
        if coords.shape != (entries.shape[0], 2):
            raise ValidationError(
                f"coords shape {coords.shape} does not match kernel size {entries.shape[0]}"
            )
        if not np.isfinite(entries).all():
            raise ValidationError("kernel contains non-finite entries")
        if np.abs(entries - entries.T).max() > 1e-12:
            raise ValidationError("kernel is not symmetric within 1e-12")
        entries.setflags(write=False)
        coords.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenBasis:
    """Spectral decomposition of a kernel, eigenvalues clamped to >= 0."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def rank(self) -> int:
        return int((self.eigenvalues > 0.0).sum())


@dataclass(frozen=True)
class SampleBudget:
    """Requested sample count, tile side length, and RNG seed."""

    k: int
    tile: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.k < 0:
            raise ValidationError(f"sample count must be >= 0, got {self.k}")
        if self.tile < 1:
            raise ValidationError(f"tile side must be >= 1, got {self.tile}")


def build_kernel(u, coords, gamma: float, sigma_s: float) -> KernelMatrix:
    """Construct the saliency-weighted similarity kernel."""
    u = np.asarray(u, dtype=np.float64)
    coords = np.asarray(coords, dtype=np.float64)
    if u.ndim != 1:
        raise ValidationError(f"saliency must be a 1-D vector, got shape {u.shape}")
    if not np.isfinite(u).all() or (u.size and u.min() < 0.0):
        raise ValidationError("saliency values must be finite and non-negative")
    if not (math.isfinite(gamma) and gamma >= 0.0):
        raise ValidationError(f"gamma must be finite and >= 0, got {gamma}")
    if not (math.isfinite(sigma_s) and sigma_s > 0.0):
        raise ValidationError(f"sigma_s must be finite and > 0, got {sigma_s}")
    if coords.shape != (u.size, 2):
        raise ValidationError(f"coords shape {coords.shape} does not match {u.size} items")
    dx = coords[:, 0, None] - coords[None, :, 0]
    dy = coords[:, 1, None] - coords[None, :, 1]
    similarity = np.exp(-(dx * dx + dy * dy) / (sigma_s * sigma_s))
    weight = u**gamma
    entries = weight[:, None] * similarity * weight[None, :]
    entries = (entries + entries.T) / 2.0
    return KernelMatrix(entries, coords, gamma, sigma_s)


def eigendecompose(kernel: KernelMatrix) -> EigenBasis:
    """Symmetric eigendecomposition with small/negative eigenvalues clamped to 0."""
    try:
        values, vectors = np.linalg.eigh(kernel.entries)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"eigendecomposition failed: {exc}") from exc
    values = np.where(values < EIGENVALUE_CLAMP, 0.0, values)
    return EigenBasis(values, vectors)


def _orthonormalize(v: np.ndarray) -> None:
    """In-place modified Gram-Schmidt on the columns of v."""
    for c in range(v.shape[1]):
        col = v[:, c]
        norm2 = float(col @ col)
        if norm2 < 1e-24:
            raise np.linalg.LinAlgError("projection basis degenerated during sampling")
        col /= math.sqrt(norm2)
        if c + 1 < v.shape[1]:
            v[:, c + 1 :] -= np.outer(col, col @ v[:, c + 1 :])


def _sample_projection(v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw from the projection process spanned by the orthonormal columns of v.

    Each round picks item i with probability proportional to the squared row
    norm, then restricts the span to the subspace orthogonal to e_i.  Returns
    exactly v.shape[1] distinct indices.
    """
    v = np.array(v, dtype=np.float64)
    m = v.shape[1]
    chosen: list[int] = []
    while m > 0:
        weights = np.einsum("ij,ij->i", v, v)
        cdf = np.cumsum(weights)
        i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        i = min(i, weights.size - 1)
        chosen.append(i)
        if m == 1:
            break
        j = int(np.argmax(np.abs(v[i])))
        pivot_col = v[:, j].copy()
        pivot = v[i, j]
        # drop the pivot column by swapping in the last one, then shrink
        v[:, j] = v[:, m - 1]
        m -= 1
        v = v[:, :m]
        v -= np.outer(pivot_col / pivot, v[i])
        _orthonormalize(v)
    return np.sort(np.asarray(chosen, dtype=np.int64))


def dpp_sample(basis: EigenBasis, rng: np.random.Generator) -> np.ndarray:
    """One exact draw from the DPP; the empty set is a valid outcome."""
    lam = basis.eigenvalues
    keep = rng.random(lam.size) < lam / (lam + 1.0)
    return _sample_projection(basis.eigenvectors[:, keep], rng)


def _log_esp_table(log_lam: np.ndarray, k: int) -> np.ndarray:
    """log of elementary symmetric polynomials, table[j, i] = log e_j(lam[:i])."""
    n = log_lam.size
    table = np.full((k + 1, n + 1), -np.inf)
    table[0, :] = 0.0
    for i in range(1, n + 1):
        table[1:, i] = np.logaddexp(table[1:, i - 1], log_lam[i - 1] + table[:-1, i - 1])
    return table


def _kdpp_pick_eigenvectors(lam: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Select k eigenvector indices with probability proportional to the
    product of their eigenvalues.  Computed in log space so large tiles
    cannot overflow the polynomial recursion."""
    log_lam = np.full(lam.shape, -np.inf)
    np.log(lam, out=log_lam, where=lam > 0.0)
    table = _log_esp_table(log_lam, k)
    chosen: list[int] = []
    j = k
    for i in range(lam.size, 0, -1):
        if j == 0:
            break
        if not np.isfinite(table[j, i]):
            continue
        p = math.exp(min(log_lam[i - 1] + table[j - 1, i - 1] - table[j, i], 0.0))
        if rng.random() < p:
            chosen.append(i - 1)
            j -= 1
    if j != 0:
        raise np.linalg.LinAlgError("eigenvalue selection failed to reach size k")
    return np.asarray(chosen[::-1], dtype=np.int64)


def kdpp_sample(basis: EigenBasis, k: int, rng: np.random.Generator) -> np.ndarray:
    """One exact draw of size exactly k from the DPP conditioned on |Y| = k."""
    if k < 0:
        raise ValidationError(f"sample size must be >= 0, got {k}")
    if k == 0:
        return np.empty(0, dtype=np.int64)
    rank = basis.rank
    if k > rank:
        raise ValidationError(f"requested size k={k} exceeds kernel rank {rank}")
    if k == basis.n:
        # the whole ground set is the only subset of size n
        return np.arange(basis.n, dtype=np.int64)
    keep = _kdpp_pick_eigenvectors(basis.eigenvalues, k, rng)
    return _sample_projection(basis.eigenvectors[:, keep], rng)


# ---------------------------------------------------------------------------
# full-image tiled sampling


def _derived_rng(seed: int, tile_row: int, tile_col: int) -> np.random.Generator:
    payload = struct.pack("<Qqq", seed & 0xFFFFFFFFFFFFFFFF, tile_row, tile_col)
    digest = hashlib.sha256(payload).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _partial_fisher_yates(pool: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """First k entries of a Fisher-Yates shuffle of pool."""
    pool = pool.copy()
    if k == 0:
        return pool[:0]
    js = rng.integers(np.arange(k), pool.size)
    for i in range(k):
        j = js[i]
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


def random_bitmap(
    width: int, height: int, k: int, seed: int, exclude: Bitmap | None = None
) -> Bitmap:
    """Uniformly random k-subset of pixels, deterministic per seed.

    Pixels set in `exclude` are never drawn.
    """
    if exclude is not None and exclude.shape != (height, width):
        raise ValidationError(
            f"exclusion mask shape {exclude.shape} does not match {(height, width)}"
        )
    if exclude is None:
        pool = np.arange(width * height, dtype=np.int64)
    else:
        pool = np.flatnonzero(~exclude.bits.ravel())
    if k > pool.size:
        raise ValidationError(f"cannot draw {k} pixels from {pool.size} available")
    rng = np.random.default_rng(seed)
    chosen = _partial_fisher_yates(pool, k, rng)
    bits = np.zeros(width * height, dtype=bool)
    bits[chosen] = True
    return Bitmap(bits.reshape(height, width))


def topk_bitmap(u: ErrorMap, k: int, exclude: Bitmap | None = None) -> Bitmap:
    """Bitmap of the k largest saliency values, ties broken by row-major index."""
    if exclude is not None and exclude.shape != u.shape:
        raise ValidationError(
            f"exclusion mask shape {exclude.shape} does not match map {u.shape}"
        )
    flat = u.data.ravel()
    if exclude is None:
        pool = np.arange(flat.size, dtype=np.int64)
    else:
        pool = np.flatnonzero(~exclude.bits.ravel())
    if k > pool.size:
        raise ValidationError(f"cannot pick top {k} of {pool.size} available pixels")
    order = np.argsort(-flat[pool], kind="stable")[:k]
    bits = np.zeros(flat.size, dtype=bool)
    bits[pool[order]] = True
    return Bitmap(bits.reshape(u.shape))


def _largest_remainder(weights: np.ndarray, amount: int) -> np.ndarray:
    """Integer apportionment of `amount` proportional to non-negative weights."""
    quotas = amount * weights / weights.sum()
    base = np.floor(quotas).astype(np.int64)
    leftover = amount - int(base.sum())
    if leftover > 0:
        remainders = quotas - base
        order = np.lexsort((np.arange(weights.size), -remainders))
        base[order[:leftover]] += 1
    return base


def _apportion(masses: np.ndarray, capacities: np.ndarray, total: int) -> np.ndarray:
    """Split `total` across tiles proportionally to saliency mass.

    Largest-remainder rounding, clamped at tile capacity; overflow is
    redistributed over the unsaturated tiles by the same rule (falling back
    to capacity-proportional shares once all remaining mass is zero).
    """
    assigned = np.zeros(masses.size, dtype=np.int64)
    remaining = total
    while remaining > 0:
        room = capacities - assigned
        active = np.flatnonzero(room > 0)
        weights = masses[active].astype(np.float64)
        if weights.sum() == 0.0:
            weights = room[active].astype(np.float64)
        grant = _largest_remainder(weights, remaining)
        assigned[active] += np.minimum(grant, room[active])
        remaining = total - int(assigned.sum())
    return assigned


def _sample_tile(
    values: np.ndarray,
    coords: np.ndarray,
    k: int,
    gamma: float,
    sigma_s: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Indices (into values/coords) of k pixels chosen within one tile."""
    if k == values.size:
        return np.arange(values.size, dtype=np.int64)
    if values.sum() == 0.0:
        return _partial_fisher_yates(np.arange(values.size, dtype=np.int64), k, rng)
    basis = eigendecompose(build_kernel(values + SALIENCY_FLOOR, coords, gamma, sigma_s))
    draw = min(k, basis.rank)
    chosen = kdpp_sample(basis, draw, rng)
    if draw < k:
        # numerical rank fell short of the assigned budget: top up uniformly
        rest = np.setdiff1d(np.arange(values.size, dtype=np.int64), chosen)
        fill = _partial_fisher_yates(rest, k - draw, rng)
        chosen = np.concatenate([chosen, fill])
    return chosen


def tiled_wdpp_bitmap(
    u: ErrorMap,
    budget: SampleBudget,
    gamma: float,
    sigma_s: float,
    exclude: Bitmap | None = None,
    threads: int = 1,
) -> Bitmap:
    """Full-image WDPP rescan bitmap with exactly `budget.k` bits set.

    The image is partitioned into `budget.tile`-sided tiles (edge tiles
    smaller), the budget is apportioned across tiles proportionally to their
    saliency mass, and each tile is sampled independently with a per-tile
    derived seed, so the result does not depend on `threads`.  Pixels set in
    `exclude` are never selected and carry no mass.
    """
    h, w = u.shape
    if exclude is not None and exclude.shape != u.shape:
        raise ValidationError(
            f"exclusion mask shape {exclude.shape} does not match map {u.shape}"
        )
    allowed = np.ones((h, w), dtype=bool) if exclude is None else ~exclude.bits
    if budget.k > int(allowed.sum()):
        raise ValidationError(
            f"budget k={budget.k} exceeds the {int(allowed.sum())} selectable pixels"
        )

    t = budget.tile
    tiles = [
        (r0, c0, min(r0 + t, h), min(c0 + t, w))
        for r0 in range(0, h, t)
        for c0 in range(0, w, t)
    ]
    masses = np.array(
        [u.data[r0:r1, c0:c1][allowed[r0:r1, c0:c1]].sum() for r0, c0, r1, c1 in tiles]
    )
    capacities = np.array(
        [int(allowed[r0:r1, c0:c1].sum()) for r0, c0, r1, c1 in tiles], dtype=np.int64
    )
    quotas = _apportion(masses, capacities, budget.k)

    def run_tile(index: int) -> np.ndarray:
        r0, c0, r1, c1 = tiles[index]
        k = int(quotas[index])
        if k == 0:
            return np.empty(0, dtype=np.int64)
        mask = allowed[r0:r1, c0:c1].ravel()
        local = np.flatnonzero(mask)
        rows, cols = np.divmod(local, c1 - c0)
        coords = np.stack([cols + c0, rows + r0], axis=1).astype(np.float64)
        values = u.data[r0:r1, c0:c1].ravel()[local]
        rng = _derived_rng(budget.seed, r0 // t, c0 // t)
        picked = _sample_tile(values, coords, k, gamma, sigma_s, rng)
        return (rows[picked] + r0) * w + (cols[picked] + c0)

    indices = range(len(tiles))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            selections = list(pool.map(run_tile, indices))
    else:
        selections = [run_tile(i) for i in indices]

    bits = np.zeros(h * w, dtype=bool)
    for sel in selections:
        bits[sel] = True
    return Bitmap(bits.reshape(h, w))
