import os
import logging
from argparse import ArgumentParser

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.ticker import MaxNLocator

from envelope import TimeSeries
from tools import read_csv, check_directory_exists

logger = logging.getLogger(__name__)

COLORS = ["b", "g", "m", "c", "y", "k"]


def emit_svg(series, path, style=None, fits=None):
    """
    Plot a set of series sharing one grid and save it as svg.
    Every curve is tagged with the id "curve-<name>", every fitted envelope with "envelope-<name>".
    Inputs:
        series - ordered mapping name -> TimeSeries
        path - destination file
        style - optional dict with the keys title, xlabel, ylabel, figsize, n_ticks, log_scale
        fits - optional mapping name -> DecayFit, drawn as dashed red envelopes
    """
    style = style or {}

    with plt.rc_context({"svg.hashsalt": "qb-eit", "svg.fonttype": "none"}):
        fig = plt.figure(figsize=style.get("figsize", (6.4, 4.0)))
        ax = fig.add_subplot(111)
        ax.set_title(style.get("title", ""))

        # plot the curves
        for ind, (name, s) in enumerate(series.items()):
            line, = ax.plot(s.t, s.y, "-", color=COLORS[ind % len(COLORS)], linewidth=1.0, label=name)
            line.set_gid("curve-{}".format(name))

        # plot the envelopes
        for name, fit in (fits or {}).items():
            if fit is None or name not in series:
                continue
            t = series[name].t
            envelope, = ax.plot(t, fit.envelope(t), "--", color="r", linewidth=1.0,
                                label="envelope, rate {:.3g}".format(fit.rate))
            envelope.set_gid("envelope-{}".format(name))

        ax.xaxis.set_major_locator(MaxNLocator(style.get("n_ticks", 5)))
        ax.yaxis.set_major_locator(MaxNLocator(style.get("n_ticks", 5)))
        ax.set_xlabel(style.get("xlabel", "t"))
        ax.set_ylabel(style.get("ylabel", ""))
        ax.set_yscale("log") if style.get("log_scale", False) else None
        ax.legend()

        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

    logger.info("wrote figure %s", path)
    return path


if __name__ == "__main__":
    """
    Re-plot a csv file written by run_scenario.py.
    """

    parser = ArgumentParser()
    parser.add_argument("-f", "--file", dest="file", help="csv file to display", required=True)
    parser.add_argument("-o", "--out", dest="out", help="svg destination (defaults to the csv name)", default=None)
    parser.add_argument("-l", "--log", dest="log_scale", help="flag to use a log scale", action="store_true")

    args = parser.parse_args()
    check_directory_exists(os.path.dirname(os.path.abspath(args.file)))

    header, data = read_csv(args.file)
    curves = {name: TimeSeries(data[:, 0], data[:, i + 1], name) for i, name in enumerate(header[1:])}
    out = args.out or os.path.splitext(args.file)[0] + ".svg"
    emit_svg(curves, out, style={"title": os.path.basename(args.file), "xlabel": header[0],
                                 "log_scale": args.log_scale})
