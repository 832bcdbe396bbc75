"""CSV tables and SVG line plots for a :class:`~cdmaica.harness.SerReport`.

One CSV and one SVG per (noise, M) pair. The SVG is rendered only from the
CSV columns, so ``plot`` on a directory of CSVs reproduces the files that
``run`` wrote byte for byte.
"""

import csv
import io
import math
import os
import re

CSV_HEADER = ("snr_db", "algorithm", "detector", "mean_ser", "stderr", "failed_runs", "mean_iterations")
SER_FLOOR = 1e-5

_NAME = re.compile(r"^ser_(?P<noise>[a-z]+)_M(?P<m>\d+)\.csv$")


def _num(x):
    return repr(float(x))


def _rows_by_panel(report):
    panels = {}
    for r in report:
        panels.setdefault((r.noise, r.symbols), []).append(
            {
                "snr_db": float(r.snr_db),
                "algorithm": r.algorithm,
                "detector": r.detector,
                "mean_ser": float(r.mean_ser),
                "stderr": float(r.ser_stderr),
                "failed_runs": int(r.failed_runs),
                "mean_iterations": float(r.mean_iterations),
            }
        )
    for rows in panels.values():
        rows.sort(key=lambda d: (d["snr_db"], d["algorithm"], d["detector"]))
    return panels


def csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for d in rows:
        w.writerow([_num(d["snr_db"]), d["algorithm"], d["detector"], _num(d["mean_ser"]),
                    _num(d["stderr"]), str(d["failed_runs"]), _num(d["mean_iterations"])])
    return buf.getvalue()


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def write_csv(report, out_dir):
    """Write ``ser_<noise>_M<M>.csv`` files and return their paths."""
    if not len(report):
        raise ValueError("report is empty")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for (noise, m), rows in sorted(_rows_by_panel(report).items()):
        path = os.path.join(out_dir, f"ser_{noise}_M{m}.csv")
        _write(path, csv_text(rows))
        paths.append(path)
    return paths


def read_csv_dir(csv_dir):
    """Load every ``ser_*.csv`` in ``csv_dir`` as ``{(noise, M): rows}``."""
    panels = {}
    for name in sorted(os.listdir(csv_dir)):
        m = _NAME.match(name)
        if not m:
            continue
        with open(os.path.join(csv_dir, name), encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_HEADER:
                raise ValueError(f"{name}: unexpected header {reader.fieldnames}")
            rows = [
                {
                    "snr_db": float(d["snr_db"]),
                    "algorithm": d["algorithm"],
                    "detector": d["detector"],
                    "mean_ser": float(d["mean_ser"]),
                    "stderr": float(d["stderr"]),
                    "failed_runs": int(d["failed_runs"]),
                    "mean_iterations": float(d["mean_iterations"]),
                }
                for d in reader
            ]
        panels[(m["noise"], int(m["m"]))] = rows
    return panels


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_W, _H = 640, 440
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 190, 40, 50
_COLORS = {"none": "#000000", "comon": "#d62728", "jade": "#1f77b4", "fastica": "#2ca02c"}
_DASH = {"sud": "", "ica": "6,4", "sudica": ""}
_LABEL = {"sud": "SUD", "ica": "ICA", "sudica": "SUD-ICA"}


def _f(x):
    return f"{x:.2f}"


def series_label(algorithm, detector):
    if detector == "sud":
        return "SUD"
    return f"{_LABEL[detector]} ({algorithm})"


def svg_text(rows, title):
    """Log-scale SER vs SNR chart.

    Points with zero measured SER are drawn at the ``1e-5`` floor as hollow
    triangles; points without any scored run (NaN) are left out. A series
    with a single point is drawn as a marker without a line.
    """
    series = {}
    for d in rows:
        series.setdefault((d["algorithm"], d["detector"]), []).append((d["snr_db"], d["mean_ser"]))
    order = sorted(series, key=lambda k: (k[1] != "sud", k[1], k[0]))
    snrs = sorted({d["snr_db"] for d in rows})
    lo, hi = (snrs[0], snrs[-1]) if snrs else (0.0, 1.0)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM
    ylo = math.log10(SER_FLOOR)

    def px(s):
        return _LEFT + (s - lo) / (hi - lo) * pw

    def py(v):
        return _TOP + (0.0 - math.log10(max(v, SER_FLOOR))) / (0.0 - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="#ffffff"/>',
        f'<text x="{_f(_LEFT + pw / 2)}" y="24" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for e in range(int(ylo), 1):
        y = py(10.0**e)
        out.append(f'<line x1="{_LEFT}" y1="{_f(y)}" x2="{_LEFT + pw}" y2="{_f(y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{_LEFT - 6}" y="{_f(y + 4)}" text-anchor="end">1e{e}</text>')
    for s in snrs:
        x = px(s)
        out.append(f'<line x1="{_f(x)}" y1="{_TOP}" x2="{_f(x)}" y2="{_TOP + ph}" stroke="#eeeeee"/>')
        out.append(f'<text x="{_f(x)}" y="{_TOP + ph + 18}" text-anchor="middle">{s:g}</text>')
    out.append(f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000000"/>')
    out.append(f'<text x="{_f(_LEFT + pw / 2)}" y="{_H - 10}" text-anchor="middle">SNR per user (dB)</text>')
    out.append(f'<text x="18" y="{_f(_TOP + ph / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 18 {_f(_TOP + ph / 2)})">symbol error rate</text>')

    for i, key in enumerate(order):
        alg, detector = key
        color = _COLORS.get(alg, "#7f7f7f")
        pts = sorted((s, v) for s, v in series[key] if not math.isnan(v))
        dash = _DASH[detector]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        if len(pts) > 1:
            coords = " ".join(f"{_f(px(s))},{_f(py(v))}" for s, v in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        for s, v in pts:
            x, y = px(s), py(v)
            if v <= 0.0:
                out.append(f'<path d="M{_f(x)},{_f(y - 5)} L{_f(x + 5)},{_f(y + 4)} L{_f(x - 5)},{_f(y + 4)} Z" '
                           f'fill="#ffffff" stroke="{color}"/>')
            else:
                out.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="3" fill="{color}"/>')
        ly = _TOP + 10 + 18 * i
        lx = _LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{series_label(alg, detector)}</text>')
    note_y = _TOP + 10 + 18 * len(order) + 8
    out.append(f'<text x="{_LEFT + pw + 12}" y="{note_y}" font-size="10">hollow triangle: 0 errors</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _title(noise, m):
    return f"SER vs SNR, {'AWGN' if noise == 'awgn' else 'pink noise'}, M = {m}"


def render_panels(panels, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for (noise, m), rows in sorted(panels.items()):
        path = os.path.join(out_dir, f"ser_{noise}_M{m}.svg")
        _write(path, svg_text(rows, _title(noise, m)))
        paths.append(path)
    return paths


def render_plot(report, out_dir):
    """Write one ``ser_<noise>_M<M>.svg`` per panel and return the paths."""
    if not len(report):
        raise ValueError("report is empty")
    return render_panels(_rows_by_panel(report), out_dir)
