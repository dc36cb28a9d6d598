"""Plot artifacts from a report dict: ROC/confusion/importance CSVs and small SVGs."""
from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _fmt(v):
    if v is None:
        return "inf"
    return repr(float(v))


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def roc_svg(curves, class_names, title="ROC", size=360) -> str:
    pad = 40
    span = size - 2 * pad

    def xy(fpr, tpr):
        return f"{pad + fpr * span:.2f},{size - pad - tpr * span:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 140}" height="{size}" '
        f'viewBox="0 0 {size + 140} {size}">',
        f'<title>{escape(title)}</title>',
        f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="#333"/>',
        f'<line x1="{pad}" y1="{size - pad}" x2="{size - pad}" y2="{pad}" '
        'stroke="#aaa" stroke-dasharray="4 3"/>',
        f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle" font-size="12">'
        'False positive rate</text>',
        f'<text x="12" y="{size / 2}" font-size="12" transform="rotate(-90 12 {size / 2})" '
        'text-anchor="middle">True positive rate</text>',
    ]
    for i, c in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(xy(f, t) for f, t in zip(c["fpr"], c["tpr"]))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        auc = c.get("auc")
        label = f"{class_names[i]} (AUC {auc:.3f})" if auc is not None else f"{class_names[i]}"
        parts.append(f'<text x="{size - pad + 10}" y="{pad + 16 * i + 10}" font-size="11" '
                     f'fill="{color}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def confusion_svg(matrix, class_names, title="Confusion matrix", cell=48) -> str:
    n = len(matrix)
    pad = 60
    size = pad + n * cell + 10
    peak = max((max(r) for r in matrix), default=0) or 1
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">', f'<title>{escape(title)}</title>']
    for t, row in enumerate(matrix):
        for p, v in enumerate(row):
            shade = int(255 - 200 * v / peak)
            x, y = pad + p * cell, pad + t * cell
            parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                         f'fill="rgb({shade},{shade},255)" stroke="#fff"/>')
            parts.append(f'<text x="{x + cell / 2}" y="{y + cell / 2 + 4}" font-size="12" '
                         f'text-anchor="middle">{v}</text>')
    for i, name in enumerate(class_names):
        parts.append(f'<text x="{pad + i * cell + cell / 2}" y="{pad - 8}" font-size="11" '
                     f'text-anchor="middle">{escape(str(name))}</text>')
        parts.append(f'<text x="{pad - 8}" y="{pad + i * cell + cell / 2 + 4}" font-size="11" '
                     f'text-anchor="end">{escape(str(name))}</text>')
    parts.append(f'<text x="{pad + n * cell / 2}" y="14" font-size="11" text-anchor="middle">'
                 'predicted</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def emit_plots(report: dict, out_dir, svg: bool = True) -> list[Path]:
    """Write plot data for one report into ``out_dir``; returns the files written.

    * ``roc_class<c>.csv``: ``fpr,tpr,threshold`` from (0,0) to (1,1)
    * ``confusion.csv``: rows are true classes, columns predictions
    * ``feature_importance.csv`` when the report has importances
    * ``roc.svg`` and ``confusion.svg`` when ``svg`` is true
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create plot directory {out}: {exc}") from exc
    test = report["test"]
    names = report.get("class_names") or [str(i) for i in range(len(test["confusion"]))]
    written = []
    for c in test["roc"]:
        path = out / f"roc_class{c['class']}.csv"
        _write_rows(path, ["fpr", "tpr", "threshold"],
                    [[_fmt(f), _fmt(t), _fmt(th)] for f, t, th in zip(c["fpr"], c["tpr"], c["thresholds"])])
        written.append(path)
    path = out / "confusion.csv"
    _write_rows(path, ["true\\pred"] + list(names),
                [[names[i]] + list(row) for i, row in enumerate(test["confusion"])])
    written.append(path)
    fi = report.get("feature_importances")
    if fi:
        path = out / "feature_importance.csv"
        ranked = sorted(fi.items(), key=lambda kv: (-kv[1], kv[0]))
        _write_rows(path, ["feature", "importance"], [[k, _fmt(v)] for k, v in ranked])
        written.append(path)
    if svg:
        family = report.get("family", "")
        curves = [{"fpr": c["fpr"], "tpr": c["tpr"], "auc": c.get("auc")} for c in test["roc"]]
        path = out / "roc.svg"
        path.write_text(roc_svg(curves, names, f"ROC {family}"), encoding="utf-8")
        written.append(path)
        path = out / "confusion.svg"
        path.write_text(confusion_svg(test["confusion"], names, f"Confusion {family}"),
                        encoding="utf-8")
        written.append(path)
    return written
