import itertools

import numpy as np
import numpy.typing as npt
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def rendered(fig: Figure) -> npt.NDArray[np.uint8]:
    """
    Render a figure with Agg and return its RGBA pixels.
    """
    canvas = FigureCanvasAgg(fig)
    canvas.draw()
    return np.asarray(canvas.buffer_rgba()).copy()


def assert_figures_equal(fig1: Figure, fig2: Figure) -> None:
    np.testing.assert_array_equal(rendered(fig1), rendered(fig2))


def assert_figures_not_equal(fig1: Figure, fig2: Figure) -> None:
    a, b = rendered(fig1), rendered(fig2)
    assert a.shape != b.shape or not np.array_equal(a, b), "figures render identically"


def brute_force_bottleneck(dist: npt.NDArray[np.float64]) -> float:
    """
    Smallest maximum pair distance over every permutation.
    """
    n = dist.shape[0]
    rows = np.arange(n)
    return min(
        float(dist[rows, list(perm)].max())
        for perm in itertools.permutations(range(n))
    )
