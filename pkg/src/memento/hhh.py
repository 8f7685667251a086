"""Hierarchical heavy hitters over a sliding window.

A single sliding-window sketch is shared by all prefix levels: each packet
advances the window once and, with probability tau_full, one uniformly
chosen generalization of its key receives a Full update. Frequency
estimates are scaled by the per-prefix sampling ratio V. The output pass
walks the lattice bottom-up and admits a prefix when its conservatively
estimated conditioned frequency (its own upper bound, minus lower bounds
of already admitted descendants, plus an inclusion-exclusion correction
in two dimensions and a sampling compensation term) reaches the
threshold share of the window.

A state instance is single-writer; run `output` only with no updates in
flight.
"""

from __future__ import annotations

import json
import math
import random
import warnings
from dataclasses import dataclass, field

from . import hierarchy as hi
from .errors import ConfigError
from .planner import min_tau_hhh, z_score
from .sketch import MementoSketch


@dataclass(frozen=True)
class HHHConfig:
    """Parameters for windowed hierarchical heavy hitter detection.

    tau_full is the per-packet Full-update probability (the per-level rate
    is tau_full / hierarchy size). None resolves it from the planner
    minimum. Configs below the planner minimum are rejected unless
    allow_void is set, since the coverage guarantee is void there.
    """
    window: int
    eps_a: float
    eps_s: float
    delta: float
    theta: float
    dim: int = 1
    tau_full: float | None = None
    allow_void: bool = False

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ConfigError(f"theta must be in (0, 1), got {self.theta}")
        if self.theta <= self.eps_a + self.eps_s:
            raise ConfigError(
                f"theta={self.theta} must exceed eps_a + eps_s = "
                f"{self.eps_a + self.eps_s}, output would be vacuous")


@dataclass
class HHHEntry:
    """One admitted prefix with its frequency estimates."""
    prefix: tuple
    f_hat: float
    f_upper: float
    f_lower: float
    cond_freq: float

    def as_dict(self) -> dict:
        return {"prefix": hi.format_prefix(self.prefix),
                "fHat": self.f_hat, "fUpper": self.f_upper,
                "fLower": self.f_lower, "condFreq": self.cond_freq}

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def calc_pred_1d(p: tuple, entries) -> float:
    """Conditioned-frequency adjustment for one dimension: minus the
    lower-bound mass of the nearest already chosen descendants of p."""
    by_prefix = {e.prefix: e for e in entries}
    group = hi.best_generalized(p, by_prefix.keys())
    return -sum(by_prefix[h].f_lower for h in group)


def calc_pred_2d(p: tuple, entries, f_upper_of) -> float:
    """Two-dimensional adjustment: subtract nearest chosen descendants,
    then add back each pair's greatest lower bound, unless a third group
    member generalizes it (that overlap is already covered once).

    f_upper_of maps a prefix to its upper frequency bound; the glb of two
    chosen prefixes need not be chosen itself.
    """
    by_prefix = {e.prefix: e for e in entries}
    group = sorted(hi.best_generalized(p, by_prefix.keys()))
    result = -sum(by_prefix[h].f_lower for h in group)
    for i, h in enumerate(group):
        for h2 in group[i + 1:]:
            q = hi.glb(h, h2)
            if q is None:
                continue
            if any(h3 not in (h, h2) and hi.generalizes(h3, q)
                   for h3 in group):
                continue
            result += f_upper_of(q)
    return result


class HHHState:
    """Single-sketch hierarchical heavy hitter detector."""

    def __init__(self, cfg: HHHConfig, seed: int | None = None,
                 debug_checks: bool = False):
        self.cfg = cfg
        self.hier = hi.Hierarchy(cfg.dim)
        size = self.hier.size
        with warnings.catch_warnings():
            # the floor is queried, not requested; clamping is expected
            warnings.simplefilter("ignore")
            floor_tau = min_tau_hhh(cfg.window, cfg.eps_s, cfg.delta, size)
        if cfg.tau_full is None:
            # round the ratio down so the effective rate stays above the
            # planner floor
            self.ratio = max(size, int(size / floor_tau))
        else:
            if cfg.tau_full < floor_tau and not cfg.allow_void:
                raise ConfigError(
                    f"tau_full={cfg.tau_full:.4g} is below the planner "
                    f"minimum {floor_tau:.4g}; pass allow_void=True to "
                    f"run without the coverage guarantee")
            self.ratio = hi.sampling_ratio(self.hier, cfg.tau_full)
        self.tau_full = size / self.ratio  # effective rate after rounding
        self.rng = random.Random(seed)
        # one sketch for all levels, sized for a per-level error share
        self.sketch = MementoSketch(
            cfg.window, cfg.eps_a / size, tau=self.tau_full,
            seed=None if seed is None else seed ^ 0x5EED,
            debug_checks=debug_checks)
        self.window = self.sketch.window

    def update(self, key) -> None:
        """Process one packet. Consumes one RNG draw; the window advances
        exactly once whether or not a prefix is sampled."""
        i = self.rng.randrange(self.ratio)
        if i < self.hier.size:
            self.sketch.full_update(
                hi.prefix_at(key, i, self.hier.dim))
        else:
            self.sketch.window_update()

    def ingest_sampled(self, key) -> None:
        """Full update for a packet sampled elsewhere (network-wide
        ingestion): one uniformly random prefix level of the key. The
        caller is responsible for the matching window advances of
        unsampled packets via `advance_window`."""
        level = self.rng.randrange(self.hier.size)
        self.sketch.full_update(hi.prefix_at(key, level, self.hier.dim))

    def advance_window(self) -> None:
        self.sketch.window_update()

    # frequency estimators -------------------------------------------------

    def f_hat(self, p: tuple) -> float:
        """Unbiased-style point estimate: scaled sample count."""
        return self.sketch.raw_uncorrected(p) * self.ratio

    def f_upper(self, p: tuple) -> float:
        """Upper frequency bound: scaled one-sided sketch estimate."""
        return self.sketch.raw_query(p) * self.ratio

    def f_lower(self, p: tuple) -> float:
        """Lower frequency bound: upper bound minus the sketch error and
        the two-sided sampling band, clamped at zero."""
        return max(0.0, self.f_upper(p) - self._lower_margin())

    def _lower_margin(self) -> float:
        return (self.cfg.eps_a * self.window
                + 2.0 * z_score(1.0 - self.cfg.delta / 2.0)
                * math.sqrt(self.ratio * self.window))

    # output ---------------------------------------------------------------

    def _candidates(self) -> list[tuple]:
        seen = set(self.sketch.overflows)
        seen.update(key for key, _ in self.sketch.table.items())
        return sorted(seen)

    def output(self, theta: float | None = None) -> list[HHHEntry]:
        """Bottom-up admission over all prefixes with a live sketch entry.

        Prefixes within a level are visited in canonical tuple order;
        near-tied estimates can therefore differ from another visit order.
        """
        theta = self.cfg.theta if theta is None else theta
        cutoff = theta * self.window
        compensation = (2.0 * z_score(1.0 - self.cfg.delta)
                        * math.sqrt(self.ratio * self.window))
        by_depth: dict[int, list[tuple]] = {}
        for p in self._candidates():
            by_depth.setdefault(hi.depth(p), []).append(p)

        admitted: dict[tuple, HHHEntry] = {}
        # admitted descendants indexed by every lattice ancestor, so the
        # nearest-descendant scan per candidate stays cheap
        desc_index: dict[tuple, list[tuple]] = {}
        lower_margin = self._lower_margin()
        for level in range(self.hier.max_depth + 1):
            for p in by_depth.get(level, ()):
                f_up = self.f_upper(p)
                pred = self._calc_pred(p, admitted, desc_index)
                cond = f_up + pred + compensation
                if cond >= cutoff:
                    entry = HHHEntry(
                        prefix=p, f_hat=self.f_hat(p), f_upper=f_up,
                        f_lower=max(0.0, f_up - lower_margin),
                        cond_freq=cond)
                    admitted[p] = entry
                    for anc in self._strict_ancestors(p):
                        desc_index.setdefault(anc, []).append(p)
        return list(admitted.values())

    def _strict_ancestors(self, p: tuple):
        if len(p) == 2:
            for bits in hi.BYTE_LEVELS:
                if bits < p[0]:
                    yield (bits, p[1] & hi._MASK[bits])
        else:
            for sbits in hi.BYTE_LEVELS:
                if sbits > p[0]:
                    continue
                for dbits in hi.BYTE_LEVELS:
                    if dbits > p[2] or (sbits, dbits) == (p[0], p[2]):
                        continue
                    yield (sbits, p[1] & hi._MASK[sbits],
                           dbits, p[3] & hi._MASK[dbits])

    def _nearest_admitted(self, p: tuple, admitted: dict,
                          desc_index: dict) -> list[tuple]:
        """G(p | admitted): admitted strict descendants of p without an
        intermediate admitted prefix. Any intermediate is itself a lattice
        ancestor of the descendant, so checking the ancestor grid of each
        descendant suffices."""
        group = []
        for h in desc_index.get(p, ()):
            blocked = False
            for mid in self._strict_ancestors(h):
                if mid != p and mid in admitted and \
                        hi.strictly_generalizes(p, mid):
                    blocked = True
                    break
            if not blocked:
                group.append(h)
        return group

    def _calc_pred(self, p: tuple, admitted: dict, desc_index: dict
                   ) -> float:
        group = self._nearest_admitted(p, admitted, desc_index)
        result = 0.0
        for h in group:
            result -= admitted[h].f_lower
        if self.hier.dim == 1 or len(group) < 2:
            return result
        # two dimensions: add back common descendants, unless a third
        # group member generalizes the pair's glb (its region was already
        # subtracted exactly once through that member)
        group_set = set(group)
        for i, h in enumerate(group):
            for h2 in group[i + 1:]:
                q = hi.glb(h, h2)
                if q is None:
                    continue
                covered = False
                for h3 in self._generalizers(q):
                    if h3 != h and h3 != h2 and h3 in group_set:
                        covered = True
                        break
                if not covered:
                    result += self.f_upper(q)
        return result

    def _generalizers(self, q: tuple):
        """All prefixes generalizing q, including q itself."""
        if len(q) == 2:
            for bits in hi.BYTE_LEVELS:
                if bits <= q[0]:
                    yield (bits, q[1] & hi._MASK[bits])
        else:
            for sbits in hi.BYTE_LEVELS:
                if sbits > q[0]:
                    continue
                for dbits in hi.BYTE_LEVELS:
                    if dbits > q[2]:
                        continue
                    yield (sbits, q[1] & hi._MASK[sbits],
                           dbits, q[3] & hi._MASK[dbits])
