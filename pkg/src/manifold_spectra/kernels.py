"""
Radial kernel profiles ``eta`` and the quantities derived from them.
"""

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
import numpy.typing as npt
from scipy import integrate, special

from .util import Interval

__all__ = ["KernelSpec", "make_kernel", "unit_ball_volume", "PROFILES"]

Array = npt.NDArray[np.float64]
Profile = Literal["indicator", "bump", "gauss", "expbump"]

#: Supported kernel profiles
PROFILES: tuple[str, ...] = ("indicator", "bump", "gauss", "expbump")
#: Width of the truncated Gaussian profile
GAUSS_WIDTH = 0.5

_QUAD_OPTS: dict[str, Any] = {"epsabs": 0.0, "epsrel": 1e-11, "limit": 200}


def unit_ball_volume(m: int) -> float:
    """Volume ``omega_m`` of the unit ball in ``R^m``."""
    return float(np.pi ** (m / 2) / special.gamma(m / 2 + 1))


def _shape(profile: str) -> Callable[[Array], Array]:
    """Unnormalized profile on ``[0, 1]``; zero outside."""
    if profile == "indicator":
        return lambda t: np.ones_like(t)
    if profile == "bump":
        return lambda t: 1.0 - t
    if profile == "gauss":
        return lambda t: np.exp(-(t**2) / (2 * GAUSS_WIDTH**2))

    def expbump(t: Array) -> Array:
        out = np.zeros_like(t)
        inside = t < 1.0
        out[inside] = np.exp(1.0 / (t[inside] - 1.0))
        return out

    return expbump


def _expbump_tail(s: Array) -> Array:
    """
    ``int_s^1 exp(1 / (t - 1)) t dt`` in closed form.

    With ``u = 1 / (1 - t)`` the integral becomes
    ``E_2(u0) / u0 - E_3(u0) / u0^2`` where ``E_n`` is the generalized
    exponential integral.
    """
    out = np.zeros_like(s)
    inside = s < 1.0
    u0 = 1.0 / (1.0 - s[inside])
    out[inside] = special.expn(2, u0) / u0 - special.expn(3, u0) / u0**2
    return out


def _radial_integral(func: Callable[[float], float]) -> float:
    value, _ = integrate.quad(func, 0.0, 1.0, **_QUAD_OPTS)
    return float(value)


@dataclass(frozen=True)
class KernelSpec:
    """
    A normalized radial kernel ``eta`` supported on ``[0, 1]``.

    Use `make_kernel` to build one.

    Attributes
    ----------
    profile : str
        One of `PROFILES`.
    m : int
        Dimension the kernel is normalized against,
        ``int_{R^m} eta(|x|) dx = 1``.
    scale : float
        Normalization constant multiplying the unnormalized profile.
    sigma : float
        Surface tension ``sigma_eta = int |y_1|^2 eta(|y|) dy``.
    lipschitz : float
        Lipschitz constant of ``eta`` on ``[0, 1]``.
    """

    profile: str
    m: int
    scale: float
    sigma: float
    lipschitz: float

    def eta(self, t: Any) -> Array:
        """Evaluate ``eta(t)``; zero for ``t > 1``."""
        t_arr = np.asarray(t, dtype=np.float64)
        flat = np.atleast_1d(t_arr)
        out = np.zeros_like(flat)
        inside = (flat >= 0) & (flat <= 1)
        out[inside] = self.scale * _shape(self.profile)(flat[inside])
        return out.reshape(t_arr.shape)

    @property
    def eta0(self) -> float:
        """``eta(0)``."""
        return float(self.eta(0.0))

    @property
    def eta_half(self) -> float:
        """``eta(1/2)``."""
        return float(self.eta(0.5))

    @property
    def omega(self) -> float:
        """Volume of the unit ball in ``R^m``."""
        return unit_ball_volume(self.m)

    def psi(self, t: Any) -> Array:
        """
        Evaluate ``psi(t) = (1 / sigma) int_t^infty eta(s) s ds``.

        ``psi`` is nonincreasing, vanishes for ``t >= 1`` and is
        normalized like ``eta``.
        """
        t_arr = np.asarray(t, dtype=np.float64)
        s = np.clip(np.atleast_1d(t_arr), 0.0, 1.0)
        c = self.scale
        if self.profile == "indicator":
            tail = c * (1 - s**2) / 2
        elif self.profile == "bump":
            tail = c * (1 / 6 - s**2 / 2 + s**3 / 3)
        elif self.profile == "gauss":
            w2 = GAUSS_WIDTH**2
            tail = c * w2 * (np.exp(-(s**2) / (2 * w2)) - np.exp(-1 / (2 * w2)))
        else:
            tail = c * _expbump_tail(s)
        return (tail / self.sigma).reshape(t_arr.shape)

    def normalization(self) -> float:
        """Radial quadrature of ``int_{R^m} eta(|x|) dx``; equals 1."""
        m = self.m
        area = m * self.omega
        return area * _radial_integral(
            lambda r: float(self.eta(r)) * r ** (m - 1)
        )

    def psi_normalization(self) -> float:
        """Radial quadrature of ``int_{R^m} psi(|x|) dx``; equals 1."""
        m = self.m
        return (
            m
            * self.omega
            * _radial_integral(lambda r: float(self.psi(r)) * r ** (m - 1))
        )

    def is_nonincreasing(self, probes: int = 1001) -> bool:
        """Check that ``eta`` is nonincreasing on a probe grid of ``[0, 1]``."""
        values = self.eta(np.linspace(0.0, 1.0, probes))
        return bool(np.all(np.diff(values) <= 0))


def _lipschitz(profile: str, scale: float) -> float:
    if profile == "indicator":
        return 0.0
    if profile == "bump":
        return scale
    if profile == "gauss":
        # |d/dt exp(-t^2/2w^2)| peaks at t = w
        return scale * float(np.exp(-0.5)) / GAUSS_WIDTH
    # |d/dt exp(1/(t-1))| peaks at t = 1/2
    return scale * 4.0 * float(np.exp(-2.0))


def make_kernel(profile: Profile | str, m: int) -> KernelSpec:
    """
    Build a kernel profile normalized in dimension ``m``.

    Parameters
    ----------
    profile : {"indicator", "bump", "gauss", "expbump"}
        ``indicator`` is ``1/omega_m`` on ``[0, 1]``; ``bump`` is
        ``c (1 - t)``; ``gauss`` is ``c exp(-t^2 / (2 w^2))`` truncated at 1
        with ``w = GAUSS_WIDTH``; ``expbump`` is ``c exp(1 / (t - 1))``.
    m : int
        Intrinsic dimension, at least 2.

    Returns
    -------
    KernelSpec
        Normalization constants and the surface tension come from radial
        quadrature to ``1e-10`` relative, except for the indicator whose
        ``sigma = 1 / (m + 2)`` is exact.
    """
    if profile not in PROFILES:
        raise ValueError(
            f"unknown kernel profile {profile!r}; expected one of {PROFILES}"
        )
    m = Interval(2, None).check(m, "kernel dimension m")
    omega = unit_ball_volume(m)
    shape = _shape(profile)

    def shape_at(r: float) -> float:
        return float(shape(np.array([r]))[0])

    if profile == "indicator":
        scale = 1.0 / omega
        sigma = 1.0 / (m + 2)
    else:
        mass = m * omega * _radial_integral(lambda r: shape_at(r) * r ** (m - 1))
        scale = 1.0 / mass
        sigma = (
            omega * scale * _radial_integral(lambda r: shape_at(r) * r ** (m + 1))
        )

    return KernelSpec(
        profile=str(profile),
        m=m,
        scale=scale,
        sigma=sigma,
        lipschitz=_lipschitz(str(profile), scale),
    )
