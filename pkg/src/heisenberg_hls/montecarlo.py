"""Importance-sampled Monte Carlo for the bilinear HLS energy.

Works for any n on the Heisenberg group and, through the flat geometry,
on R^N; this is the evaluation path for dimensions the deterministic
quadrature does not cover.

Estimator: with v = u w (group translate),

    E[f, g] = E_{u ~ p_u, w ~ p_w} [ f(u) g(u w) |w|^(-lam) / (p_u(u) p_w(w)) ].

The w proposal is an equal mixture of a broad heavy-tailed component and a
near-diagonal component whose radial density is proportional to
r^(Q-1-lam) on (0, r0]; the latter cancels the kernel singularity exactly,
which keeps the estimator variance bounded for all lam in (0, Q).

Sampling uses the polar structure of homogeneous balls: if W is uniform in
the unit ball then delta_R(W / |W|) has the cone-measure direction law, and
radial laws are sampled by inversion.  Streams are split by worker index
with SeedSequence spawning; results are bitwise reproducible for a fixed
(seed, workers) pair and independent of scheduling because partial sums are
merged in stream order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .group import ball_volume as heis_ball_volume
from .group import multiply_coords, norm_coords
from .constants import log_gamma


@dataclass(frozen=True)
class Geometry:
    """Ambient geometry: Heisenberg H^n or Euclidean R^N."""

    kind: str  # "heisenberg" | "euclidean"
    n: int  # complex dimension for heisenberg, N for euclidean

    def __post_init__(self):
        if self.kind not in ("heisenberg", "euclidean"):
            raise ValueError(f"unknown geometry {self.kind!r}")
        if self.n < 1:
            raise ValueError("dimension must be a positive integer")

    @property
    def dim(self) -> int:
        return 2 * self.n + 1 if self.kind == "heisenberg" else self.n

    @property
    def Q(self) -> float:
        return float(2 * self.n + 2 if self.kind == "heisenberg" else self.n)

    def ball_volume(self) -> float:
        if self.kind == "heisenberg":
            return heis_ball_volume(self.n)
        N = self.n
        return math.exp(0.5 * N * math.log(math.pi) - log_gamma(N / 2.0 + 1.0))

    def norm(self, pts: np.ndarray) -> np.ndarray:
        if self.kind == "heisenberg":
            return norm_coords(pts, self.n)
        return np.sqrt(np.einsum("ij,ij->i", pts, pts))

    def shift(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        if self.kind == "heisenberg":
            return multiply_coords(u, w, self.n)
        return u + w

    def dilate(self, r: np.ndarray, pts: np.ndarray) -> np.ndarray:
        if self.kind == "heisenberg":
            out = pts.copy()
            out[:, : 2 * self.n] *= r[:, None]
            out[:, 2 * self.n] *= r * r
            return out
        return pts * r[:, None]

    def uniform_ball(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Uniform samples in the unit ball by box rejection."""
        out = np.empty((m, self.dim))
        have = 0
        while have < m:
            cand = rng.uniform(-1.0, 1.0, size=(2 * (m - have) + 64, self.dim))
            keep = cand[self.norm(cand) < 1.0]
            take = min(keep.shape[0], m - have)
            out[have : have + take] = keep[:take]
            have += take
        return out


@dataclass(frozen=True)
class ParetoBall:
    """Density c * max(|x|, r0)^-(alpha+Q): uniform core, Pareto tail."""

    geom: Geometry
    r0: float
    alpha: float

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        pts = self.geom.uniform_ball(rng, m)
        # direction from the ball sample, radius by inversion
        radii = self.geom.norm(pts)
        radii = np.where(radii > 0, radii, 1.0)
        core = rng.random(m) < self.alpha / (self.alpha + self.geom.Q)
        u = rng.random(m)
        r_tail = self.r0 * u ** (-1.0 / self.alpha)
        scale = np.where(core, self.r0, r_tail / radii)
        return self.geom.dilate(scale, pts)

    def pdf(self, pts: np.ndarray) -> np.ndarray:
        Q = self.geom.Q
        c = self.r0 ** self.alpha * self.alpha / (self.geom.ball_volume() * (self.alpha + Q))
        r = self.geom.norm(pts)
        return c * np.maximum(r, self.r0) ** (-(self.alpha + Q))


@dataclass(frozen=True)
class SingularMatched:
    """Radial density proportional to r^(Q-1-lam) on (0, r0], cone direction;
    the pointwise density is then proportional to |w|^(-lam)."""

    geom: Geometry
    r0: float
    lam: float

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        Q = self.geom.Q
        pts = self.geom.uniform_ball(rng, m)
        radii = self.geom.norm(pts)
        radii = np.where(radii > 0, radii, 1.0)
        r = self.r0 * rng.random(m) ** (1.0 / (Q - self.lam))
        return self.geom.dilate(r / radii, pts)

    def pdf(self, pts: np.ndarray) -> np.ndarray:
        Q = self.geom.Q
        r = self.geom.norm(pts)
        c = (Q - self.lam) / (Q * self.geom.ball_volume() * self.r0 ** (Q - self.lam))
        with np.errstate(divide="ignore"):
            val = c * r ** (-self.lam)
        return np.where(r <= self.r0, val, 0.0)


def mc_bilinear_energy(
    f,
    g,
    lam: float,
    n: int,
    samples: int,
    seed: int,
    workers: int = 1,
    geometry: str = "heisenberg",
    r0: float = 1.0,
    alpha: float = 1.5,
    u_scale: float = 2.0,
) -> tuple[float, float]:
    """Monte Carlo estimate of the bilinear energy; returns (estimate, stderr).

    f and g are vectorized callables on coordinate arrays of shape
    (m, dim): (x, y, t) rows for the Heisenberg geometry, plain x rows for
    the Euclidean one.
    """
    if samples < 1000:
        raise ValueError("samples must be at least 10^3")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    geom = Geometry(geometry, n)
    if not (0.0 < lam < geom.Q):
        raise ValueError(f"lambda must lie in (0, Q) = (0, {geom.Q}), got {lam}")

    u_prop = ParetoBall(geom, u_scale, alpha)
    w_broad = ParetoBall(geom, r0, alpha)
    w_near = SingularMatched(geom, r0, lam)

    streams = np.random.SeedSequence(seed).spawn(workers)
    counts = np.full(workers, samples // workers)
    counts[: samples % workers] += 1

    total = 0.0
    total_sq = 0.0
    for stream, m in zip(streams, counts):
        if m == 0:
            continue
        rng = np.random.default_rng(stream)
        u = u_prop.sample(rng, int(m))
        near = rng.random(int(m)) < 0.5
        w = np.empty((int(m), geom.dim))
        idx_n = np.flatnonzero(near)
        idx_b = np.flatnonzero(~near)
        if idx_n.size:
            w[idx_n] = w_near.sample(rng, idx_n.size)
        if idx_b.size:
            w[idx_b] = w_broad.sample(rng, idx_b.size)
        v = geom.shift(u, w)
        r_w = geom.norm(w)
        kernel = r_w ** (-lam)
        p_u = u_prop.pdf(u)
        p_w = 0.5 * w_near.pdf(w) + 0.5 * w_broad.pdf(w)
        vals = f(u) * g(v) * kernel / (p_u * p_w)
        total += float(vals.sum())
        total_sq += float(np.dot(vals, vals))

    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    stderr = math.sqrt(var / samples)
    return mean, stderr


def heisenberg_extremal_callable(n: int, lam: float):
    """The closed-form diagonal extremal profile as a coordinate callable."""
    Q = 2 * n + 2
    expo = (2 * Q - lam) / 4.0

    def H(pts: np.ndarray) -> np.ndarray:
        zsq = np.einsum("ij,ij->i", pts[:, : 2 * n], pts[:, : 2 * n])
        t = pts[:, 2 * n]
        return ((1.0 + zsq) ** 2 + t * t) ** (-expo)

    return H


def euclidean_extremal_callable(N: int, lam: float):
    """The Euclidean diagonal extremal (1 + |x|^2)^(-(2N-lam)/2)."""
    expo = (2 * N - lam) / 2.0

    def F(pts: np.ndarray) -> np.ndarray:
        xsq = np.einsum("ij,ij->i", pts, pts)
        return (1.0 + xsq) ** (-expo)

    return F


def ball_indicator_callable(n: int, radius: float = 1.0, geometry: str = "heisenberg"):
    geom = Geometry(geometry, n)

    def chi(pts: np.ndarray) -> np.ndarray:
        return (geom.norm(pts) < radius).astype(float)

    return chi
