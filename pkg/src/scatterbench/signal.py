"""Signal-domain transforms: dB conversion, frequency-block splitting,
partial-observability masking, and noise injection.

Masks describe the OBSERVED region: one contiguous window per axis, with
wraparound allowed only on the periodic roll axis. Unobserved cells are
filled with the dB floor, making "not measured" and "no return" look alike.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .po import FrequencySweep, RadarResponse, ViewingGrid

DB_FLOOR = -300.0


@dataclass(frozen=True)
class DbResponse:
    """Real dB-amplitude tensor over the same (grid, sweep) as RadarResponse."""

    grid: ViewingGrid
    sweep: FrequencySweep
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        expect = (self.grid.n_aspect, self.grid.n_roll, self.sweep.n)
        if v.shape != expect:
            raise ValueError(f"values shape {v.shape} != grid x sweep {expect}")
        if not np.all(np.isfinite(v)) or v.min() < DB_FLOOR:
            raise ValueError("dB values must be finite and >= the floor")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ObservabilityMask:
    """Observed windows (start, length) per axis plus the masked fraction."""

    aspect_window: tuple
    roll_window: tuple
    coverage: float
    n_aspect: int
    n_roll: int

    def observed(self) -> np.ndarray:
        """(n_aspect, n_roll) bool, True where the cell is observed."""
        a0, al = self.aspect_window
        r0, rl = self.roll_window
        asp = np.zeros(self.n_aspect, dtype=bool)
        asp[a0 : a0 + al] = True  # aspect never wraps
        rol = (np.arange(self.n_roll) - r0) % self.n_roll < rl
        return asp[:, None] & rol[None, :]


def to_db(response: RadarResponse) -> DbResponse:
    """20*log10|F| with values clamped at the -300 dB floor."""
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(np.abs(response.values))
    return DbResponse(response.grid, response.sweep, np.maximum(db, DB_FLOOR))


def split_blocks(db: DbResponse, n_blocks: int) -> list:
    """Split into n_blocks equal frequency blocks, low to high."""
    n = db.sweep.n
    if n_blocks < 1 or n % n_blocks:
        raise ValueError(f"{n_blocks} blocks do not evenly divide {n} frequencies")
    return [np.ascontiguousarray(b) for b in np.split(db.values, n_blocks, axis=2)]


def gen_mask(n_aspect: int, n_roll: int, coverage: float, seed: int) -> ObservabilityMask:
    """Random contiguous-observation mask removing `coverage` of all cells.

    The coverage is split between the axes by a uniform draw (all of it goes
    to aspect when n_roll == 1); the roll window may wrap, the aspect window
    may not. Deterministic per seed.
    """
    if not 0.0 <= coverage <= 0.7:
        raise ValueError("coverage must lie in [0, 0.7]")
    if n_aspect < 1 or n_roll < 1:
        raise ValueError("mask needs at least one bin per axis")
    rng = np.random.default_rng(seed)
    share = float(rng.random()) if n_roll > 1 else 1.0
    masked_aspect = share * coverage
    obs_a = int(np.clip(round((1.0 - masked_aspect) * n_aspect), 1, n_aspect))
    # pick the roll window so the realized total lands within one bin
    target_cells = (1.0 - coverage) * n_aspect * n_roll
    obs_r = int(np.clip(round(target_cells / obs_a), 1, n_roll))
    a0 = int(rng.integers(0, n_aspect - obs_a + 1))
    r0 = int(rng.integers(0, n_roll))
    return ObservabilityMask((a0, obs_a), (r0, obs_r), coverage, n_aspect, n_roll)


def apply_mask(db: DbResponse, mask: ObservabilityMask, fill: float = DB_FLOOR) -> DbResponse:
    """Set unobserved cells to `fill`; observed cells pass through untouched."""
    if (mask.n_aspect, mask.n_roll) != (db.grid.n_aspect, db.grid.n_roll):
        raise ValueError("mask dimensions do not match the response grid")
    observed = mask.observed()
    out = np.where(observed[:, :, None], db.values, fill)
    return DbResponse(db.grid, db.sweep, out)


def add_noise(response: RadarResponse, level_db: float, seed: int) -> RadarResponse:
    """Add complex circular Gaussian noise of power 10^(level_db/10) per sample.

    Noise is injected in the linear domain before any dB conversion, using a
    counter-based Philox stream so the result is independent of evaluation
    order and reproducible per seed.
    """
    if not np.isfinite(level_db):
        raise ValueError("noise level must be finite")
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
    g = rng.standard_normal(response.values.shape + (2,))
    sigma = np.sqrt(10.0 ** (level_db / 10.0) / 2.0)
    noise = sigma * (g[..., 0] + 1j * g[..., 1])
    return RadarResponse(response.grid, response.sweep, response.values + noise)
