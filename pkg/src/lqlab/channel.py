"""Log-normal shadow fading link model.

Attenuation between two nodes is a deterministic path-loss term plus a
zero-mean Gaussian term in dB. A packet is received when the total
attenuation stays below the threshold attenuation ``beta_th_db``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "ChannelParams",
    "LinkDraw",
    "deterministic_attenuation",
    "draw_link",
    "draw_links",
    "delivery_rate",
    "distance_for_rate",
    "erfc",
    "r_zero",
    "erf",
    "mw_to_dbm",
    "spawn_rngs",
]

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
# erfc(6) ~ 2e-17, below double resolution next to 1.0
_ERF_TERMS = 60
_ERFC_CF_START = 2.0
_ERFC_CF_TERMS = 80


def mw_to_dbm(p_mw: float) -> float:
    return 10.0 * math.log10(p_mw)


@dataclass(frozen=True)
class ChannelParams:
    """Physical constants of one link population.

    Parameters
    ----------
    alpha : float
        Path-loss exponent.
    sigma : float
        Standard deviation of the shadowing term, dB. Zero gives a
        deterministic channel.
    pt_dbm : float
        Transmit power, dBm. Default is 50 mW.
    beta_th_db : float
        Largest attenuation at which a packet is still received, dB.
    """

    alpha: float = 3.0
    sigma: float = 4.0
    pt_dbm: float = mw_to_dbm(50.0)
    beta_th_db: float = 90.0

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if not self.beta_th_db > 0:
            raise ValueError(f"beta_th_db must be positive, got {self.beta_th_db}")
        if not math.isfinite(self.pt_dbm):
            raise ValueError("pt_dbm must be finite")
        if not (math.isfinite(self.r0) and self.r0 > 0):
            raise ValueError("derived r0 is not a finite positive distance")

    @property
    def r0(self) -> float:
        return r_zero(self)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelParams":
        unknown = set(d) - {"alpha", "sigma", "pt_dbm", "beta_th_db"}
        if unknown:
            raise ValueError(f"unknown channel keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class LinkDraw:
    beta_db: float
    rssi_dbm: float
    received: bool


def _check_distance(d) -> np.ndarray:
    arr = np.asarray(d, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("distance must be strictly positive")
    return arr


def deterministic_attenuation(d, params: ChannelParams):
    """Geometric path loss ``10 * alpha * log10(d / 1 m)`` in dB.

    Accepts a scalar or an array of distances in meters.
    """
    arr = _check_distance(d)
    out = params.alpha * 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def draw_link(d: float, params: ChannelParams, rng: np.random.Generator) -> LinkDraw:
    beta = deterministic_attenuation(d, params) + rng.normal(0.0, params.sigma)
    return LinkDraw(
        beta_db=beta,
        rssi_dbm=params.pt_dbm - beta,
        received=bool(beta < params.beta_th_db),
    )


def draw_links(d, n: int, params: ChannelParams, rng: np.random.Generator):
    """Vectorised version of :func:`draw_link`.

    Draws ``n`` independent shadowing values per distance. For scalar ``d``
    the result arrays have shape ``(n,)``; for an array of distances the
    shape is ``d.shape + (n,)``.

    Returns
    -------
    beta_db, rssi_dbm, received : np.ndarray
    """
    base = np.asarray(deterministic_attenuation(d, params))
    beta = base[..., None] + rng.normal(0.0, params.sigma, size=base.shape + (n,))
    return beta, params.pt_dbm - beta, beta < params.beta_th_db


def r_zero(params: ChannelParams) -> float:
    """Distance (m) at which the delivery rate is exactly one half."""
    return 10.0 ** (params.beta_th_db / (10.0 * params.alpha))


def delivery_rate(d, params: ChannelParams):
    """Closed-form probability that a packet sent over distance ``d`` arrives."""
    arr = _check_distance(d)
    # log10(d / r0) written as a difference so that d == r0 gives exactly 0
    log_ratio = np.log10(arr) - params.beta_th_db / (10.0 * params.alpha)
    if params.sigma == 0:
        out = 0.5 - 0.5 * np.sign(log_ratio)
    else:
        z = 10.0 * params.alpha / (math.sqrt(2.0) * params.sigma) * log_ratio
        # erfc keeps the far tail accurate where 1 - erf(z) would cancel
        out = 0.5 * erfc(z)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def distance_for_rate(p: float, params: ChannelParams) -> float:
    """Distance at which :func:`delivery_rate` equals ``p`` (bisection on log d)."""
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    if params.sigma == 0:
        return params.r0
    lo, hi = math.log(params.r0) - 50.0, math.log(params.r0) + 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if delivery_rate(math.exp(mid), params) > p:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def erf(x):
    """Error function for scalars or arrays.

    For ``|x| < 2`` uses the everywhere-convergent series

        erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (2n+1)!!

    whose terms are all of one sign, so no cancellation occurs. Larger
    arguments go through ``1 - erfc(|x|)``, which keeps the result monotone
    as it saturates at +-1.
    """
    arr = np.asarray(x, dtype=float)
    ax = np.abs(arr)
    small = ax < _ERFC_CF_START
    xs = np.where(small, ax, 0.0)
    x2 = xs * xs
    term = xs.copy()
    total = xs.copy()
    for n in range(1, _ERF_TERMS):
        term = term * (2.0 * x2) / (2 * n + 1)
        total = total + term
    series = _TWO_OVER_SQRT_PI * np.exp(-x2) * total
    val = np.where(small, series, 1.0 - _erfc_tail(ax))
    val = np.copysign(val, arr)
    return float(val) if val.ndim == 0 else val


def _erfc_tail(x: np.ndarray) -> np.ndarray:
    """Continued fraction for ``erfc``, valid for ``x >= 2`` (other entries
    are evaluated at 2 and should be masked by the caller)."""
    xb = np.maximum(x, _ERFC_CF_START)
    frac = np.zeros_like(xb)
    for k in range(_ERFC_CF_TERMS, 0, -1):
        frac = (k / 2.0) / (xb + frac)
    with np.errstate(under="ignore"):
        return np.exp(-xb * xb) / math.sqrt(math.pi) / (xb + frac)


def erfc(x):
    """Complementary error function ``1 - erf(x)``.

    For ``x >= 2`` a continued fraction evaluated from the tail,

        erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),

    keeps full relative precision where ``1 - erf(x)`` would cancel.
    """
    arr = np.asarray(x, dtype=float)
    val = np.where(arr >= _ERFC_CF_START, _erfc_tail(arr), 1.0 - np.asarray(erf(arr)))
    return float(val) if val.ndim == 0 else val


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """Independent child generators derived from one master seed.

    Children come from ``numpy.random.SeedSequence(seed).spawn(n)``, so child
    ``i`` is the same stream no matter how many workers consume the others.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(n)]
