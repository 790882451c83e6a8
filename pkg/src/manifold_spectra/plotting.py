from pathlib import Path
from typing import Any

import matplotlib.style as mplstyle
import numpy as np
import numpy.typing as npt
from matplotlib.figure import Figure

from .geometry import SpectrumTable
from .study import ConvergenceReport
from .util import report_style

__all__ = [
    "BaseReportFigure",
    "SingleAxesFigure",
    "RatePlot",
    "KDEHistogramPlot",
    "SpectrumPlot",
]


def _get_bins(
    data: npt.NDArray[Any],
    num_bins: int = 100,
) -> npt.NDArray[Any]:
    """Create evenly spaced bins with a given interval.

    Parameters
    ----------
    data : numpy.ndarray
        Values to histogram.
    num_bins : integer, optional
        Number of evenly-spaced bins to create. Defaults to 100.

    Returns
    -------
    bin_edges : numpy.ndarray
        Array of evenly spaced bin edges.
    """
    if data.dtype.kind in {"i", "u"}:
        # Make sure integer data types have integer sized bins
        step = max(np.ceil(np.ptp(data) / num_bins), 1)
        return np.arange(np.min(data), np.max(data) + step, step)
    else:
        # For other data types we can use exactly `num_bins` bins
        # (and `num_bins` + 1 bin edges)
        return np.linspace(np.min(data), np.max(data), num_bins + 1)


class BaseReportFigure:
    """
    A Matplotlib figure styled for reports.

    This creates a single `~matplotlib.figure.Figure` with the constrained
    layout engine. It is not responsible for creating any Axes, because
    different plots may want to implement different subplot layouts.

    See Also
    --------
    SingleAxesFigure : A child class with a single Axes and a ``draw`` hook.
    """

    def __init__(self, style: dict[str, Any] | None = None):
        self.style_sheet = report_style() if style is None else style
        # Sets figure.* style
        with mplstyle.context(self.style_sheet):
            self.figure = Figure()
        self.figure.set_layout_engine("constrained")

    def add_single_axes(self) -> None:
        """
        Add a single Axes to the figure.

        The Axes is saved on the ``.axes`` attribute for later access.
        """
        # Sets axes.* style.
        # Does not set any text styling set by axes.* keys
        with mplstyle.context(self.style_sheet):
            self.axes = self.figure.add_subplot()

    def savefig(self, path: str | Path, format: str | None = None) -> Path:
        """
        Save the figure.

        SVG output carries no date and uses a fixed hash salt, so the same
        data always produces the same file.
        """
        path = Path(path)
        with mplstyle.context(self.style_sheet):
            self.figure.savefig(path, format=format, metadata=_metadata(path, format))
        return path


def _metadata(path: Path, format: str | None) -> dict[str, Any] | None:
    fmt = format or path.suffix.lstrip(".").lower()
    if fmt == "svg":
        return {"Date": None}
    if fmt == "pdf":
        return {"CreationDate": None, "ModDate": None}
    return None


class SingleAxesFigure(BaseReportFigure):
    """
    In addition to `BaseReportFigure`, this sets up a single axes and
    ``clear``/``draw`` hooks.
    """

    def __init__(self, style: dict[str, Any] | None = None):
        super().__init__(style=style)
        self.add_single_axes()

    def clear(self) -> None:
        """
        Clear the axes.
        """
        with mplstyle.context(self.style_sheet):
            self.axes.clear()

    def draw(self) -> None:
        """
        Draw the figure.

        This is a no-op, and is intended for derived classes to override.
        """

    def redraw(self) -> None:
        """Clear and draw inside the style context."""
        with mplstyle.context(self.style_sheet):
            self.clear()
            self.draw()


class RatePlot(SingleAxesFigure):
    """
    Relative eigenvalue error against ``n`` on log-log axes.

    Every usable row is a scatter point, the per-``n`` medians are joined
    by a line and the fitted power law is drawn dashed.
    """

    def __init__(
        self, report: ConvergenceReport, style: dict[str, Any] | None = None
    ):
        super().__init__(style=style)
        self.report = report
        self.redraw()

    def _row_points(self) -> tuple[list[int], list[float]]:
        index = self.report.rate_index
        ns: list[int] = []
        errs: list[float] = []
        if index is None:
            return ns, errs
        for row in self.report.rows:
            cluster = row.cluster(index)
            if not row.usable or cluster is None:
                continue
            if cluster.relative_error is not None and cluster.relative_error > 0:
                ns.append(row.n)
                errs.append(cluster.relative_error)
        return ns, errs

    def draw(self) -> None:
        """
        Scatter the rows, the medians and the fit.
        """
        ns, errs = self._row_points()
        labelled = False
        if ns:
            self.axes.scatter(ns, errs, alpha=0.5, label="rows")
            labelled = True
        medians = [(n, e) for n, e in self.report.medians if e > 0]
        if medians:
            mn, me = zip(*medians)
            self.axes.plot(mn, me, marker="o", label="median")
            labelled = True
            if self.report.slope is not None:
                grid = np.array([mn[0], mn[-1]], dtype=np.float64)
                intercept = np.mean(np.log(me) - self.report.slope * np.log(mn))
                self.axes.plot(
                    grid,
                    np.exp(intercept) * grid**self.report.slope,
                    linestyle="--",
                    label=f"slope {self.report.slope:.3f}",
                )
        self.axes.set_xscale("log")
        self.axes.set_yscale("log")
        self.axes.set_xlabel("n")
        self.axes.set_ylabel("relative eigenvalue error")
        if labelled:
            self.axes.legend()


class KDEHistogramPlot(SingleAxesFigure):
    """
    Histogram of the degree-vs-density errors ``|m_i - p(x_i)|``.
    """

    def __init__(
        self,
        errors: npt.ArrayLike,
        num_bins: int = 50,
        style: dict[str, Any] | None = None,
    ):
        super().__init__(style=style)
        self.errors = np.asarray(errors, dtype=np.float64).reshape(-1)
        self.num_bins = num_bins
        self.redraw()

    def draw(self) -> None:
        """
        Draw the histogram.
        """
        self.axes.set_xlabel("|m_i - p(x_i)|")
        self.axes.set_ylabel("vertices")
        if self.errors.size == 0:
            return
        if np.ptp(self.errors) == 0:
            bins: Any = 1
        else:
            bins = _get_bins(self.errors, num_bins=self.num_bins)
        self.axes.hist(self.errors, bins=bins, histtype="step")
        self.axes.axvline(float(self.errors.max()), color="tab:red", linestyle=":")


class SpectrumPlot(SingleAxesFigure):
    """
    Discrete eigenvalues against the continuum spectrum, by index.
    """

    def __init__(
        self,
        eigenvalues: npt.ArrayLike,
        table: SpectrumTable | None = None,
        style: dict[str, Any] | None = None,
    ):
        super().__init__(style=style)
        self.eigenvalues = np.asarray(eigenvalues, dtype=np.float64).reshape(-1)
        self.table = table
        self.redraw()

    def draw(self) -> None:
        """
        Plot both spectra.
        """
        index = np.arange(1, self.eigenvalues.size + 1)
        self.axes.plot(index, self.eigenvalues, marker="o", linestyle="", label="graph")
        if self.table is not None:
            continuum = self.table.eigenvalues(self.eigenvalues.size)
            self.axes.step(
                np.arange(1, continuum.size + 1),
                continuum,
                where="mid",
                label="continuum",
            )
        self.axes.set_xlabel("index")
        self.axes.set_ylabel("eigenvalue")
        if self.eigenvalues.size:
            self.axes.legend()
