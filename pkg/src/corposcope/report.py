"""Plain-text/markdown report tables and a dependency-free SVG heatmap.

Table shapes: explained variance per component, the full loading matrix,
category contributions per component, min-max normalized dataset scores,
and the correlation heatmap matrix (benchmark x model rows, PC columns).
"""

from __future__ import annotations

from .analysis import CorrelationTable, DeltaEntry
from .pca import CATEGORY_ORDER, PcaModel, category_contributions, normalized_scores


def _table(headers: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(headers) + " |"]
    lines.append("|" + "|".join(" --- " for _ in headers) + "|")
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


def render_report(
    model: PcaModel,
    correlations: CorrelationTable | None = None,
    deltas: tuple[DeltaEntry, ...] | None = None,
) -> str:
    pcs = [f"PC{i}" for i in range(1, model.n_components + 1)]
    sections: list[str] = [f"# Dataset structure report: language `{model.language}`", ""]
    sections.append(f"Datasets analyzed: {model.n_datasets}")
    sections.append("")

    sections.append("## Explained variance ratios")
    sections.append("")
    sections.append(
        _table(
            ["language", *pcs],
            [[model.language, *[_fmt(v) for v in model.explained_variance_ratio]]],
        )
    )
    sections.append("")

    sections.append("## Component loadings")
    sections.append("")
    sections.append(
        _table(
            ["component", *model.metric_order],
            [
                [pcs[i], *[_fmt(v) for v in model.loadings[i]]]
                for i in range(model.n_components)
            ],
        )
    )
    sections.append("")

    sections.append("## Category contributions")
    sections.append("")
    contributions = category_contributions(model)
    sections.append(
        _table(
            ["component", *CATEGORY_ORDER],
            [
                [pcs[i], *[_fmt(v) for v in contributions[i]]]
                for i in range(model.n_components)
            ],
        )
    )
    sections.append("")

    sections.append("## Normalized dataset scores (min-max per component)")
    sections.append("")
    norm = normalized_scores(model)
    sections.append(
        _table(
            ["dataset", *pcs],
            [[did, *[_fmt(v) for v in norm[did]]] for did in sorted(norm)],
        )
    )
    sections.append("")

    if correlations is not None:
        sections.append("## Correlations with benchmark scores")
        sections.append("")
        heat = correlations.heatmap(model.n_components)
        sections.append(
            _table(
                ["benchmark | model", *heat["columns"]],
                [
                    [heat["rows"][i], *[_fmt(v) for v in heat["values"][i]]]
                    for i in range(len(heat["rows"]))
                ],
            )
        )
        sections.append("")

    if deltas:
        sections.append("## Subset performance deltas (subset - random)")
        sections.append("")
        sections.append(
            _table(
                ["model", "pc", "mode", "mean_delta", "n_groups"],
                [
                    [e.model, f"PC{e.pc}", e.mode, _fmt(e.mean_delta), str(e.n_groups)]
                    for e in deltas
                ],
            )
        )
        sections.append("")

    return "\n".join(sections)


def _diverging_color(value: float) -> str:
    """Blue (-1) -> white (0) -> red (+1)."""
    v = max(-1.0, min(1.0, value))
    if v < 0:
        t = 1.0 + v  # 0 at -1, 1 at 0
        r, g, b = int(round(33 + t * 222)), int(round(102 + t * 153)), 255
    else:
        t = 1.0 - v
        r, g, b = 255, int(round(102 + t * 153)), int(round(33 + t * 222))
    return f"#{r:02x}{g:02x}{b:02x}"


def render_heatmap_svg(
    row_labels: list[str], col_labels: list[str], values: list[list[float | None]]
) -> str:
    """Self-contained SVG heatmap with a fixed diverging scale over [-1, 1]."""
    cell_w, cell_h = 64, 24
    label_w = 16 + max((len(r) for r in row_labels), default=0) * 7
    header_h = 28
    width = label_w + cell_w * len(col_labels) + 8
    height = header_h + cell_h * len(row_labels) + 8
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="12">'
    ]
    for j, col in enumerate(col_labels):
        x = label_w + j * cell_w + cell_w / 2
        parts.append(f'<text x="{x}" y="18" text-anchor="middle">{col}</text>')
    for i, row in enumerate(row_labels):
        y = header_h + i * cell_h
        parts.append(
            f'<text x="{label_w - 6}" y="{y + cell_h / 2 + 4}" text-anchor="end">{_escape(row)}</text>'
        )
        for j in range(len(col_labels)):
            value = values[i][j]
            x = label_w + j * cell_w
            if value is None:
                fill = "#dddddd"
                text = "-"
            else:
                fill = _diverging_color(value)
                text = f"{value:+.2f}"
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell_w - 2}" height="{cell_h - 2}" fill="{fill}"/>'
            )
            parts.append(
                f'<text x="{x + cell_w / 2 - 1}" y="{y + cell_h / 2 + 4}" text-anchor="middle">{text}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
