"""Sharp constants and admissible exponent tuples for the HLS inequality.

Two families of closed forms are implemented, all as Gamma-ratios evaluated
in log space:

* Heisenberg group H^n (homogeneous dimension Q = 2n + 2): the diagonal
  sharp constant `frank_lieb_constant` and the volume-based upper bound
  `theorem2_upper_bound` valid for all admissible (r, s).
* Euclidean R^N reference: the diagonal sharp constant
  `lieb_diagonal_constant` and the upper bound `lieb_loss_upper_bound`.

Exponents: the operator form sup_{|f|_p=1} |I_lam f|_q is governed by

    1/q = 1/p - (Q - lam)/Q,      1 < p < Q/(Q - lam),

and translates to the bilinear form on L^r x L^s through r = q/(q-1),
s = p, which gives 1/r + 1/s + lam/Q = 2 identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import gammaln

from .group import homogeneous_dimension

#: Tolerance for the linear exponent relations.  Inputs violating them by
#: more than this are rejected, never projected.
ADMISSIBILITY_TOL = 1e-12

#: Lieb diagonal constant variant shipped as default.  The printed form uses
#: pi^(lam/N); the standard form uses pi^(lam/2).  The Monte Carlo quotient
#: with the known Euclidean extremal (see tests) selects "standard".
DEFAULT_LIEB_VARIANT = "standard"


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not (x > 0.0 and math.isfinite(x)):
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return float(gammaln(x))


@dataclass(frozen=True)
class HlsParams:
    """Exponent tuple (n, Q, lam, p, q, r, s) for the Heisenberg HLS problem."""

    n: int
    Q: int
    lam: float
    p: float
    q: float
    r: float
    s: float

    def validate(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.Q != homogeneous_dimension(self.n):
            raise ValueError(f"Q must equal 2n+2 = {homogeneous_dimension(self.n)}")
        if not (0.0 < self.lam < self.Q):
            raise ValueError(f"lambda must lie in (0, Q) = (0, {self.Q}), got {self.lam}")
        if not (1.0 < self.p < self.Q / (self.Q - self.lam)):
            raise ValueError(
                f"p must lie in (1, Q/(Q-lambda)) = (1, {self.Q / (self.Q - self.lam)}), got {self.p}"
            )
        if not (self.q > 1.0 and math.isfinite(self.q)):
            raise ValueError(f"q must be finite and > 1, got {self.q}")
        if abs(1.0 / self.q - (1.0 / self.p - (self.Q - self.lam) / self.Q)) > ADMISSIBILITY_TOL:
            raise ValueError("q does not satisfy 1/q = 1/p - (Q-lambda)/Q")
        if abs(self.r - self.q / (self.q - 1.0)) > ADMISSIBILITY_TOL * max(1.0, self.r):
            raise ValueError("r must equal the conjugate q/(q-1)")
        if abs(self.s - self.p) > ADMISSIBILITY_TOL:
            raise ValueError("s must equal p")
        bilinear = 1.0 / self.r + 1.0 / self.s + self.lam / self.Q
        if abs(bilinear - 2.0) > ADMISSIBILITY_TOL:
            raise ValueError(f"bilinear condition 1/r+1/s+lambda/Q = 2 violated: {bilinear}")
        return self

    @property
    def is_diagonal(self) -> bool:
        return abs(self.r - self.s) <= 1e-12


@dataclass(frozen=True)
class EuclideanParams:
    """Exponents (N, lam, r, s) for the Euclidean bilinear HLS form."""

    N: int
    lam: float
    r: float
    s: float

    def validate(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if not (0.0 < self.lam < self.N):
            raise ValueError(f"lambda must lie in (0, N), got {self.lam}")
        if not (1.0 < self.r < math.inf and 1.0 < self.s < math.inf):
            raise ValueError("r and s must lie in (1, infinity)")
        bilinear = 1.0 / self.r + 1.0 / self.s + self.lam / self.N
        if abs(bilinear - 2.0) > ADMISSIBILITY_TOL:
            raise ValueError(f"bilinear condition 1/r+1/s+lambda/N = 2 violated: {bilinear}")
        return self


def derive_conjugates(n: int, lam: float, p: float) -> HlsParams:
    """Populate the full exponent tuple from (n, lambda, p).

    q is determined by 1/q = 1/p - (Q-lambda)/Q; then r = q/(q-1) and s = p.
    p outside (1, Q/(Q-lambda)) makes q nonpositive or infinite and is
    rejected.
    """
    if n < 1 or int(n) != n:
        raise ValueError(f"n must be a positive integer, got {n}")
    Q = homogeneous_dimension(int(n))
    if not (0.0 < lam < Q):
        raise ValueError(f"lambda must lie in (0, Q) = (0, {Q}), got {lam}")
    p_max = Q / (Q - lam)
    if not (1.0 + ADMISSIBILITY_TOL < p and p < p_max - ADMISSIBILITY_TOL):
        raise ValueError(f"p must lie in (1, Q/(Q-lambda)) = (1, {p_max}), got {p}")
    inv_q = 1.0 / p - (Q - lam) / Q
    q = 1.0 / inv_q
    r = q / (q - 1.0)
    return HlsParams(n=int(n), Q=Q, lam=float(lam), p=float(p), q=q, r=r, s=float(p)).validate()


def diagonal_params(n: int, lam: float) -> HlsParams:
    """Exponents of the diagonal case r = s = 2Q/(2Q-lambda), where the sharp
    constant and extremal profile are known in closed form."""
    Q = homogeneous_dimension(int(n))
    if not (0.0 < lam < Q):
        raise ValueError(f"lambda must lie in (0, Q) = (0, {Q}), got {lam}")
    return derive_conjugates(n, lam, 2.0 * Q / (2.0 * Q - lam))


def frank_lieb_constant(n: int, lam: float) -> float:
    """Sharp constant of the diagonal Heisenberg HLS inequality.

        (pi^(n+1) / (2^(n-1) n!))^(lam/Q) * n! * Gamma((Q-lam)/2)
                                          / Gamma((2Q-lam)/4)^2

    in the bilinear normalization with r = s = 2Q/(2Q-lam).
    """
    if n < 1 or int(n) != n:
        raise ValueError(f"n must be a positive integer, got {n}")
    Q = homogeneous_dimension(int(n))
    if not (0.0 < lam < Q):
        raise ValueError(f"lambda must lie in (0, Q) = (0, {Q}), got {lam}")
    log_vol_factor = (n + 1) * math.log(math.pi) - (n - 1) * math.log(2.0) - log_gamma(n + 1.0)
    lg = (
        (lam / Q) * log_vol_factor
        + log_gamma(n + 1.0)
        + log_gamma((Q - lam) / 2.0)
        - 2.0 * log_gamma((2.0 * Q - lam) / 4.0)
    )
    return math.exp(lg)


def _check_bilinear(dim_label: str, dim: float, lam: float, r: float, s: float):
    if not (0.0 < lam < dim):
        raise ValueError(f"lambda must lie in (0, {dim_label}) = (0, {dim}), got {lam}")
    if not (1.0 < r < math.inf and 1.0 < s < math.inf):
        raise ValueError("r and s must lie in (1, infinity)")
    bilinear = 1.0 / r + 1.0 / s + lam / dim
    if abs(bilinear - 2.0) > ADMISSIBILITY_TOL:
        raise ValueError(f"bilinear condition 1/r+1/s+lambda/{dim_label} = 2 violated: {bilinear}")


def theorem2_upper_bound(n: int, lam: float, r: float, s: float) -> float:
    """Upper bound for the Heisenberg HLS constant at general (r, s):

        Q |B_1|^(lam/Q) / (r s (Q-lam)) *
            [ ((lam/Q)/(1-1/r))^(lam/Q) + ((lam/Q)/(1-1/s))^(lam/Q) ]

    Not sharp; diverges as lam -> Q.
    """
    from .group import ball_volume

    if n < 1 or int(n) != n:
        raise ValueError(f"n must be a positive integer, got {n}")
    Q = homogeneous_dimension(int(n))
    _check_bilinear("Q", Q, lam, r, s)
    a = lam / Q
    pref = Q * ball_volume(int(n)) ** a / (r * s * (Q - lam))
    return pref * ((a / (1.0 - 1.0 / r)) ** a + (a / (1.0 - 1.0 / s)) ** a)


def lieb_diagonal_constant(N: int, lam: float, variant: str = DEFAULT_LIEB_VARIANT) -> float:
    """Sharp constant of the diagonal Euclidean HLS inequality on R^N,
    r = s = 2N/(2N-lam):

        pi^e * Gamma(N/2 - lam/2) / Gamma(N - lam/2)
             * (Gamma(N/2) / Gamma(N))^((lam-N)/N)

    where e = lam/2 for variant "standard" and e = lam/N for variant
    "paper".  The variants coincide at N = 2; the Monte Carlo oracle with
    the known extremal (1 + |x|^2)^(-(2N-lam)/2) selects "standard".
    """
    if N < 1 or int(N) != N:
        raise ValueError(f"N must be a positive integer, got {N}")
    if not (0.0 < lam < N):
        raise ValueError(f"lambda must lie in (0, N) = (0, {N}), got {lam}")
    if variant == "standard":
        e = lam / 2.0
    elif variant == "paper":
        e = lam / N
    else:
        raise ValueError(f"variant must be 'standard' or 'paper', got {variant!r}")
    lg = (
        e * math.log(math.pi)
        + log_gamma(N / 2.0 - lam / 2.0)
        - log_gamma(N - lam / 2.0)
        + ((lam - N) / N) * (log_gamma(N / 2.0) - log_gamma(float(N)))
    )
    return math.exp(lg)


def lieb_loss_upper_bound(N: int, lam: float, r: float, s: float) -> float:
    """Upper bound for the Euclidean HLS constant at general (r, s):

        N / (r s (N-lam)) * (omega_{N-1}/N)^(lam/N) *
            [ ((lam/N)/(1-1/r))^(lam/N) + ((lam/N)/(1-1/s))^(lam/N) ]

    with omega_{N-1} = 2 pi^(N/2) / Gamma(N/2) the area of the unit sphere.
    """
    if N < 1 or int(N) != N:
        raise ValueError(f"N must be a positive integer, got {N}")
    _check_bilinear("N", float(N), lam, r, s)
    a = lam / N
    omega = 2.0 * math.exp(0.5 * N * math.log(math.pi) - log_gamma(N / 2.0))
    pref = N / (r * s * (N - lam)) * (omega / N) ** a
    return pref * ((a / (1.0 - 1.0 / r)) ** a + (a / (1.0 - 1.0 / s)) ** a)
