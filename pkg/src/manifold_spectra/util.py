from typing import Any

import numpy as np
import numpy.typing as npt

__all__ = ["Interval", "as_points", "canonical_kind", "report_style"]

_KIND_ALIASES = {
    "un": "unnormalized",
    "unnormalized": "unnormalized",
    "rw": "random-walk",
    "random-walk": "random-walk",
    "sym": "symmetric",
    "symmetric": "symmetric",
}


class Interval:
    """
    An integer interval.
    """

    def __init__(self, lower_bound: int | None, upper_bound: int | None):
        """
        Parameters
        ----------
        lower_bound, upper_bound:
            Bounds. Use `None` to specify an open bound.
        """
        if (
            lower_bound is not None
            and upper_bound is not None
            and lower_bound > upper_bound
        ):
            raise ValueError("lower_bound must be <= upper_bound")

        self.lower = lower_bound
        self.upper = upper_bound

    def __repr__(self) -> str:
        """
        Get string representation.
        """
        return f"Interval({self.lower}, {self.upper})"

    def __contains__(self, val: int) -> bool:
        """
        Return True if val is in the current interval.
        """
        if isinstance(val, bool) or not isinstance(val, int | np.integer):
            raise ValueError("variable must be an integer")
        if self.lower is not None and val < self.lower:
            return False
        if self.upper is not None and val > self.upper:
            return False
        return True

    def _helper_text(self, name: str) -> str:
        """
        Describe the interval for an error message about ``name``.
        """
        if self.lower is None and self.upper is None:
            return f"{name} can be any integer"
        elif self.lower is not None and self.upper is None:
            return f"{name} must be at least {self.lower}"
        elif self.lower is None and self.upper is not None:
            return f"{name} must be at most {self.upper}"
        elif self.lower == self.upper:
            return f"{name} must be exactly {self.lower}"
        return f"{name} must be between {self.lower} and {self.upper}"

    def check(self, val: int, name: str) -> int:
        """
        Validate ``val`` and return it as a Python int.

        Raises
        ------
        ValueError
            If ``val`` is not an integer inside the interval.
        """
        if val not in self:
            raise ValueError(f"{self._helper_text(name)}, got {val}")
        return int(val)


def as_points(points: Any, name: str = "points") -> npt.NDArray[np.float64]:
    """
    Convert ``points`` to a C-contiguous ``(n, d)`` float64 array.

    A single point given as a 1D array is promoted to shape ``(1, d)``.
    """
    arr = np.ascontiguousarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2D array, got shape {arr.shape}")
    return arr


def canonical_kind(kind: str) -> str:
    """
    Map a Laplacian kind or its short form (``un``, ``rw``, ``sym``) to
    ``"unnormalized"``, ``"random-walk"`` or ``"symmetric"``.
    """
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise ValueError(
            f"unknown Laplacian kind {kind!r}; expected one of "
            f"{sorted(set(_KIND_ALIASES))}"
        ) from None


def report_style() -> dict[str, Any]:
    """
    Matplotlib style dictionary used for every report figure.

    Returns
    -------
    Dict[str, Any]
        Matplotlib compatible style dictionary.
    """
    return {
        "axes.edgecolor": "#3b3a39",
        "axes.facecolor": "none",
        "axes.labelcolor": "#3b3a39",
        "axes.grid": True,
        "axes.grid.which": "both",
        "figure.edgecolor": "#3b3a39",
        "figure.facecolor": "white",
        "grid.color": "#d6d0c4",
        "grid.linewidth": 0.5,
        "legend.edgecolor": "black",
        "legend.facecolor": "white",
        "legend.labelcolor": "black",
        "lines.markersize": 4,
        "svg.hashsalt": "manifold-spectra",
        "text.color": "#3b3a39",
        "xtick.color": "#3b3a39",
        "ytick.color": "#3b3a39",
    }
