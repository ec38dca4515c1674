"""Text and SVG pictures of a schedule, one frame per timestep.

Each cell shows the qubit its patch encodes (in display numbering), an
injected state as ``Y3`` or ``A3``, ``~`` for zero-initialized filler and
``.`` when free.  In text frames, neighbouring cells of one patch are
joined by ``-`` or ``|``, so split pieces and merged patches differ.
Output depends only on the schedule, so it can be compared byte for byte.
"""

from __future__ import annotations

from html import escape

from .schedule import Frame, SurgerySchedule, display_id, frames

FORMATS = ("ascii", "svg")


class UnknownFormat(ValueError):
    pass


FILLER_LABEL = "~"


def _owners(frame: Frame) -> dict:
    return {cell: pid for pid, cells in frame.patches.items() for cell in cells}


def cell_labels(s: SurgerySchedule, frame: Frame) -> dict:
    labels = {cell: FILLER_LABEL for cell in frame.filler}
    for pid, cells in frame.patches.items():
        q = s.qubit_map.get(pid)
        text = str(q + s.base) if q is not None else display_id(pid, s.base)
        if pid[:1] in ("Y", "A"):
            text = pid[0] + text
        for cell in cells:
            labels[cell] = text
    return labels


def render_ascii(s: SurgerySchedule) -> str:
    fr = frames(s)
    R, C = s.grid
    all_labels = [cell_labels(s, f) for f in fr]
    width = max([1] + [len(t) for labels in all_labels for t in labels.values()])
    blocks = []
    for t, (f, labels) in enumerate(zip(fr, all_labels), start=1):
        own = _owners(f)

        def joined(a, b):
            return a in own and own.get(b) == own[a]

        lines = [f"step {t}/{len(fr)}: {f.phase}"]
        for r in range(R):
            row = labels.get((r, 0), ".").rjust(width)
            for c in range(1, C):
                row += ("-" if joined((r, c - 1), (r, c)) else " ") + labels.get((r, c), ".").rjust(width)
            lines.append(row.rstrip())
            if r + 1 < R:
                links = " ".join(("|" if joined((r, c), (r + 1, c)) else " ").rjust(width) for c in range(C))
                lines.append(links.rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


_PALETTE = (
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
    "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
)  # fmt: skip


def _fill(label: str) -> str:
    if label == FILLER_LABEL:
        return "#eeeeee"
    if label[0] in "YA":
        return "#ffffff"
    return _PALETTE[int(label) % len(_PALETTE)]


def render_svg(s: SurgerySchedule, cell: int = 32, gap: int = 24) -> str:
    """All frames side by side in one SVG document."""
    fr = frames(s)
    R, C = s.grid
    fw, fh = C * cell, R * cell
    width = max(1, len(fr) * (fw + gap) - gap) if fr else 1
    height = fh + 20
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="{cell // 3}">'
    ]
    for t, f in enumerate(fr):
        x0 = t * (fw + gap)
        out.append(f'<g id="step{t + 1}">')
        out.append(f'<text x="{x0}" y="12">{t + 1}: {escape(f.phase)}</text>')
        labels = cell_labels(s, f)
        for r in range(R):
            for c in range(C):
                x, y = x0 + c * cell, 20 + r * cell
                label = labels.get((r, c))
                fill = "none" if label is None else _fill(label)
                dash = ' stroke-dasharray="3,2"' if label and label[0] in "YA" else ""
                out.append(
                    f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" stroke="#555"{dash}/>'
                )
                if label is not None:
                    out.append(
                        f'<text x="{x + cell // 2}" y="{y + cell // 2 + cell // 8}" '
                        f'text-anchor="middle">{escape(label)}</text>'
                    )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(s: SurgerySchedule, fmt: str = "ascii") -> str:
    if fmt == "ascii":
        return render_ascii(s)
    if fmt == "svg":
        return render_svg(s)
    raise UnknownFormat(f"unknown render format {fmt!r}; choose from {FORMATS}")
