"""Walk-on-spheres estimate of the harmonic-measure average of boundary data.

Each walk repeatedly jumps to a uniform point on the largest circle inside the
domain (radius = |sdf|) until it is within ``epsilon`` of the boundary, then
scores ``g`` at the nearest boundary point.

Random numbers are counter based: walk ``w`` started at point ``x`` draws its
step-``t`` angle from a splitmix64 sequence keyed by ``(seed, x, w)``.  Results
therefore do not depend on batching, list order or vectorization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import Domain, PointFn

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))

TRUNCATION_WARN_FRACTION = 0.01


class NotInteriorError(ValueError):
    pass


@dataclass(frozen=True)
class WosConfig:
    epsilon: float | None = None  # None: 1e-4 * bbox diagonal
    max_steps: int = 10_000
    n_walks: int = 100_000
    seed: int = 42

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.n_walks < 1:
            raise ValueError("n_walks must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def shell(self, domain: Domain) -> float:
        return self.epsilon if self.epsilon is not None else 1e-4 * domain.bbox_diagonal


@dataclass(frozen=True)
class WosEstimate:
    mean: float
    stderr: float
    n_walks: int
    mean_steps: float
    truncated_walks: int

    @property
    def truncation_warning(self) -> bool:
        return self.truncated_walks > TRUNCATION_WARN_FRACTION * self.n_walks


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def point_stream(x) -> int:
    """Substream id derived from the bit pattern of the point's coordinates."""
    bits = np.asarray(x, dtype=np.float64).reshape(2).view(np.uint64)
    return int(_mix(bits[:1] ^ _mix(bits[1:] + _GAMMA))[0])


def walk_keys(seed: int, stream: int, n_walks: int) -> np.ndarray:
    base = _mix(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64) + _GAMMA)
    skey = _mix(base ^ _mix(np.array([stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64) + _GAMMA))
    w = np.arange(1, n_walks + 1, dtype=np.uint64)
    return _mix(skey + w * _GAMMA)


def uniforms(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Uniform doubles in [0, 1) from ``(key, counter)`` pairs."""
    bits = _mix(keys + (counters.astype(np.uint64) + np.uint64(1)) * _GAMMA)
    return (bits >> _S11).astype(np.float64) * (1.0 / 9007199254740992.0)


def project_to_boundary(domain: Domain, pts: np.ndarray) -> np.ndarray:
    """One signed-distance gradient step onto the boundary (central differences)."""
    step = 1e-6 * domain.diameter
    ex = np.array([step, 0.0])
    ey = np.array([0.0, step])
    gx = (domain.sdf(pts + ex) - domain.sdf(pts - ex)) / (2 * step)
    gy = (domain.sdf(pts + ey) - domain.sdf(pts - ey)) / (2 * step)
    norm = np.hypot(gx, gy)
    norm = np.where(norm > 0, norm, 1.0)
    d = domain.sdf(pts)
    return pts - (d / norm)[:, None] * np.stack([gx / norm, gy / norm], axis=-1)


def _run(domain: Domain, g: PointFn, points: np.ndarray, cfg: WosConfig, streams) -> list[WosEstimate]:
    eps = cfg.shell(domain)
    n = cfg.n_walks
    npts = len(points)
    keys = np.concatenate([walk_keys(cfg.seed, s, n) for s in streams])
    pos = np.repeat(points, n, axis=0)
    steps = np.zeros(npts * n, dtype=np.int64)
    stopped = np.zeros((npts * n, 2))
    truncated = np.zeros(npts * n, dtype=bool)

    active = np.arange(npts * n)
    while active.size:
        radius = -domain.sdf(pos[active])
        done = radius < eps
        over = ~done & (steps[active] >= cfg.max_steps)
        finish = done | over
        if finish.any():
            idx = active[finish]
            stopped[idx] = pos[idx]
            truncated[active[over]] = True
            active = active[~finish]
            radius = radius[~finish]
        if not active.size:
            break
        theta = 2.0 * math.pi * uniforms(keys[active], steps[active])
        pos[active, 0] += radius * np.cos(theta)
        pos[active, 1] += radius * np.sin(theta)
        steps[active] += 1

    scores = g(project_to_boundary(domain, stopped)).reshape(npts, n)
    steps = steps.reshape(npts, n)
    truncated = truncated.reshape(npts, n)
    out = []
    for i in range(npts):
        s = scores[i]
        mean = float(np.mean(s))
        stderr = float(np.std(s, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        out.append(
            WosEstimate(
                mean=mean,
                stderr=stderr,
                n_walks=n,
                mean_steps=float(np.mean(steps[i])),
                truncated_walks=int(truncated[i].sum()),
            )
        )
    return out


def _check_interior(domain: Domain, pts: np.ndarray) -> None:
    ok = domain.inside(pts)
    if not np.all(ok):
        bad = pts[~ok][0]
        raise NotInteriorError(f"point ({bad[0]:g}, {bad[1]:g}) is not inside {domain.name}")


def wos_estimate(domain: Domain, g: PointFn, x, cfg: WosConfig, *, stream: int | None = None) -> WosEstimate:
    pts = np.asarray(x, dtype=float).reshape(1, 2)
    _check_interior(domain, pts)
    return _run(domain, g, pts, cfg, [point_stream(pts[0]) if stream is None else stream])[0]


def wos_grid(
    domain: Domain, g: PointFn, points: Sequence, cfg: WosConfig, *, chunk: int = 2_000_000
) -> list[WosEstimate]:
    """Estimates at many points, each on the substream derived from the point."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if not len(pts):
        return []
    _check_interior(domain, pts)
    per = max(1, chunk // cfg.n_walks)
    out: list[WosEstimate] = []
    for start in range(0, len(pts), per):
        stop = min(start + per, len(pts))
        out.extend(_run(domain, g, pts[start:stop], cfg, [point_stream(p) for p in pts[start:stop]]))
    return out
