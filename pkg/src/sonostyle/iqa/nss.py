"""Natural-scene statistics: MSCN coefficients and (A)GGD moment fits.

Feature ordering of :func:`nss_features` (18 per scale, full scale first)::

    alpha, sigma2,
    then for the H, V, D1, D2 pairwise products: nu, eta, sigma_l2, sigma_r2

H pairs ``I(i, j) I(i, j+1)``, V pairs ``I(i, j) I(i+1, j)``, D1 the main
diagonal ``I(i, j) I(i+1, j+1)`` and D2 the anti-diagonal
``I(i, j+1) I(i+1, j)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, gammaln

from ..preprocess import gaussian_taps, resize_image, separable_filter
from ..validation import check_gray

SIGMA_W = 7.0 / 6.0
C_STAB = 1.0
MIN_SAMPLES = 100
N_FEATURES = 36

SHAPE_GRID = np.round(np.arange(0.2, 10.0 + 5e-4, 0.001), 3)


def _rho(shape: np.ndarray) -> np.ndarray:
    """``Gamma(2/a)^2 / (Gamma(1/a) Gamma(3/a))``, strictly increasing in ``a``."""
    return np.exp(2 * gammaln(2 / shape) - gammaln(1 / shape) - gammaln(3 / shape))


RHO_TABLE = _rho(SHAPE_GRID)


def invert_shape(rho: float) -> float:
    """Nearest grid shape whose moment ratio matches ``rho`` (clamped to [0.2, 10])."""
    i = int(np.searchsorted(RHO_TABLE, rho))
    if i <= 0:
        return float(SHAPE_GRID[0])
    if i >= len(RHO_TABLE):
        return float(SHAPE_GRID[-1])
    if rho - RHO_TABLE[i - 1] <= RHO_TABLE[i] - rho:
        i -= 1
    return float(SHAPE_GRID[i])


# -- MSCN --------------------------------------------------------------------

@dataclass
class MscnField:
    coef: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    C: float


def mscn(img, sigma_w: float = SIGMA_W, C: float = C_STAB) -> MscnField:
    """Mean-subtracted contrast-normalized coefficients of a gray image.

    The image is rescaled to [0, 255]; local moments use a Gaussian window
    of radius ``int(3 * sigma_w)`` with replicated borders.
    """
    if sigma_w <= 0:
        raise ValueError("sigma_w must be positive")
    if C <= 0:
        raise ValueError("C must be positive")
    img = check_gray(img) * 255.0
    taps = gaussian_taps(sigma_w, radius=int(3 * sigma_w))
    # filter offsets from one pixel so constant regions give exactly zero
    ref = img.flat[0]
    mu = separable_filter(img - ref, taps, mode="edge") + ref
    var = separable_filter((img - mu) ** 2, taps, mode="edge")
    sigma = np.sqrt(np.maximum(var, 0.0))
    return MscnField((img - mu) / (sigma + C), mu, sigma, C)


# -- distribution fits ---------------------------------------------------------

@dataclass(frozen=True)
class GgdParams:
    alpha: float
    sigma2: float


@dataclass(frozen=True)
class AggdParams:
    nu: float
    eta: float
    sigma_l2: float
    sigma_r2: float


def _samples(x, min_samples: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return x


def fit_ggd(samples, min_samples: int = MIN_SAMPLES) -> GgdParams:
    """Moment-matching GGD fit: ``rho = E|x|^2 / E[x^2]`` inverted on the shape table."""
    x = _samples(samples, min_samples)
    m2 = float(np.mean(x * x))
    if m2 <= 0:
        raise ValueError("degenerate sample: zero variance")
    rho = float(np.mean(np.abs(x))) ** 2 / m2
    return GgdParams(invert_shape(rho), m2)


def fit_aggd(samples, min_samples: int = MIN_SAMPLES, allow_one_sided: bool = False) -> AggdParams:
    """Asymmetric GGD fit from one-sided root-mean-squares.

    With ``gamma = s_l / s_r`` and ``r = E|x|^2 / E[x^2]`` the shape solves
    ``rho(nu) = r (gamma^3 + 1)(gamma + 1) / (gamma^2 + 1)^2``. The mean is
    ``eta = (beta_r - beta_l) Gamma(2/nu) / Gamma(1/nu)`` with
    ``beta = s sqrt(Gamma(1/nu) / Gamma(3/nu))``.

    ``allow_one_sided`` lets a side with no samples contribute zero spread
    (used for the small blocks of NIQE); by default it is an error.
    """
    x = _samples(samples, min_samples)
    left, right = x[x < 0], x[x > 0]
    if not allow_one_sided and (left.size == 0 or right.size == 0):
        raise ValueError("AGGD fit needs both negative and positive samples")
    m2 = float(np.mean(x * x))
    if m2 <= 0:
        raise ValueError("degenerate sample: zero variance")
    s_l = float(np.sqrt(np.mean(left * left))) if left.size else 0.0
    s_r = float(np.sqrt(np.mean(right * right))) if right.size else 0.0
    r = float(np.mean(np.abs(x))) ** 2 / m2
    if s_l > 0 and s_r > 0:
        g = s_l / s_r
        r = r * (g ** 3 + 1) * (g + 1) / (g ** 2 + 1) ** 2
    nu = invert_shape(r)
    scale = np.sqrt(gamma(1 / nu) / gamma(3 / nu))
    eta = (s_r - s_l) * scale * gamma(2 / nu) / gamma(1 / nu)
    return AggdParams(nu, float(eta), s_l * s_l, s_r * s_r)


# -- feature vector --------------------------------------------------------------

def pair_products(coef: np.ndarray) -> list[np.ndarray]:
    """H, V, D1, D2 neighbor products of an MSCN field."""
    return [coef[:, :-1] * coef[:, 1:], coef[:-1, :] * coef[1:, :],
            coef[:-1, :-1] * coef[1:, 1:], coef[:-1, 1:] * coef[1:, :-1]]


def scale_features(coef: np.ndarray, min_samples: int = MIN_SAMPLES, allow_one_sided: bool = False) -> list[float]:
    """18 features of one MSCN field (or block of one)."""
    g = fit_ggd(coef, min_samples)
    feats = [g.alpha, g.sigma2]
    for prod in pair_products(coef):
        a = fit_aggd(prod, min_samples, allow_one_sided)
        feats += [a.nu, a.eta, a.sigma_l2, a.sigma_r2]
    return feats


def half_scale(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    return resize_image(img, h // 2, w // 2)


def nss_features(img) -> np.ndarray:
    """36-element NSS vector: :func:`scale_features` at full and half scale."""
    img = check_gray(img)
    if min(img.shape) < 32:
        raise ValueError(f"image {img.shape} smaller than 32×32")
    if img.max() == img.min():
        raise ValueError("degenerate image: constant intensity")
    out = scale_features(mscn(img).coef) + scale_features(mscn(half_scale(img)).coef)
    return np.array(out)
