"""gnuplot script emission for decay and slope CSVs.

Scripts reference the CSV by path and never copy data into themselves.
Parameters such as ``eps`` and the fitted lines are read from the ``#``
comment lines that the experiment writers put at the top of each CSV.
"""

import math
import os
import re

from .. import csvio
from ..errors import ConfigError, MissingColumn

DECAY_COLUMNS = ("t", "delta_sq", "norm_sq")
SLOPE_COLUMNS = ("eps", "mse_time", "mse_ensemble")

_SUMMARY_EPS = re.compile(r"\beps=([^\s]+)")
_CONFIG_EPS = re.compile(r"^eps\s*=\s*([^\s]+)\s*$")
_FIT = re.compile(r"^fit (\w+): slope=([^\s]+) intercept=([^\s]+)")


def _comments(path):
    out = []
    with open(os.fspath(path), encoding="utf-8") as fh:
        for ln in fh:
            s = ln.strip()
            if not s:
                continue
            if not s.startswith("#"):
                break
            out.append(s[1:].strip())
    return out


def header_eps(path):
    """``eps`` recorded in the CSV comments, or None."""
    comments = _comments(path)
    for line in comments:
        m = _SUMMARY_EPS.search(line)
        if m:
            return float(m.group(1))
    for line in comments:
        m = _CONFIG_EPS.match(line)
        if m and m.group(1).lower() != "none":
            return float(m.group(1))
    return None


def header_fits(path):
    fits = {}
    for line in _comments(path):
        m = _FIT.match(line)
        if m:
            fits[m.group(1)] = (float(m.group(2)), float(m.group(3)))
    return fits


def _require(path, columns):
    header = csvio.read_header(path)
    missing = [c for c in columns if c not in header]
    if missing:
        raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}; header is {header}")
    return header


def _col(header, name):
    return header.index(name) + 1


def _quote(path):
    return '"' + os.fspath(path).replace("\\", "\\\\").replace('"', '\\"') + '"'


def decay_script(csv_path, eps=None, out_path=None):
    header = _require(csv_path, DECAY_COLUMNS)
    eps = header_eps(csv_path) if eps is None else eps
    if eps is None or not eps > 0:
        raise ConfigError("decay plot needs eps > 0 (pass eps or keep the CSV header)")
    t, d = _col(header, "t"), _col(header, "delta_sq")
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key top right",
        "set xlabel 't'",
        "set ylabel 'log |delta|'",
        f"threshold = log(3.0 * {eps!r})",
    ]
    if out_path:
        lines += ["set terminal pngcairo size 900,600", f"set output {_quote(out_path)}"]
    lines.append(
        f"plot {_quote(csv_path)} every ::1 using {t}:(0.5*log(${d})) with lines title 'log |delta|', "
        "threshold with lines dashtype 2 title 'log(3 eps)'"
    )
    return "\n".join(lines) + "\n"


def slope_script(csv_path, out_path=None):
    header = _require(csv_path, SLOPE_COLUMNS)
    fits = header_fits(csv_path)
    e = _col(header, "eps")
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key top left",
        "set xlabel 'log eps'",
        "set ylabel 'log MSE'",
    ]
    if out_path:
        lines += ["set terminal pngcairo size 900,600", f"set output {_quote(out_path)}"]
    series = []
    for mode in ("time", "ensemble"):
        c = _col(header, f"mse_{mode}")
        series.append(f"{_quote(csv_path)} every ::1 using (log(${e})):(log(${c})) "
                      f"with points pointtype 7 title '{mode} average'")
        if mode in fits:
            s, b = fits[mode]
            lines.append(f"fit_{mode}(x) = {s!r} * x + {b!r}")
            series.append(f"fit_{mode}(x) with lines title 'fit ({mode}), slope {s:.3f}'")
    # slope-2 reference through the first available fit's intercept
    ref_b = next(iter(fits.values()))[1] if fits else 0.0
    if not math.isfinite(ref_b):
        ref_b = 0.0
    lines.append(f"ref(x) = 2.0 * x + {ref_b!r}")
    series.append("ref(x) with lines dashtype 2 title 'slope 2 reference'")
    lines.append("plot " + ", ".join(series))
    return "\n".join(lines) + "\n"


def emit_plot_script(csv_path, kind, out_path=None, eps=None, image_path=None):
    """Write (when ``out_path`` is given) and return the gnuplot script for ``csv_path``.

    ``kind`` is ``"decay"`` or ``"slope"`` (experiment kinds such as
    ``decay_discrete`` are accepted too).
    """
    family = kind.split("_")[0]
    if family == "decay":
        text = decay_script(csv_path, eps, image_path)
    elif family == "slope":
        text = slope_script(csv_path, image_path)
    else:
        raise ConfigError(f"no plot template for kind {kind!r}")
    if out_path is not None:
        with open(os.fspath(out_path), "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
