/** Minimal SVG line chart for the two error-rate curves. */

export interface Series {
  label: string;
  color: string;
  points: { x: number; y: number }[];
}

export interface ChartLayout {
  width: number;
  height: number;
  margin: number;
}

export const DEFAULT_LAYOUT: ChartLayout = { width: 560, height: 320, margin: 42 };

export function scalePoints(
  series: Series[],
  layout: ChartLayout = DEFAULT_LAYOUT,
): { label: string; color: string; path: string }[] {
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const minX = Math.min(...xs, 0);
  const maxX = Math.max(...xs, 1e-9);
  const spanX = maxX - minX || 1;
  const innerW = layout.width - 2 * layout.margin;
  const innerH = layout.height - 2 * layout.margin;
  // y is always an error rate in [0, 1]
  return series.map((s) => ({
    label: s.label,
    color: s.color,
    path: s.points
      .map((p, i) => {
        const px = layout.margin + ((p.x - minX) / spanX) * innerW;
        const py = layout.margin + (1 - p.y) * innerH;
        return `${i === 0 ? "M" : "L"}${px.toFixed(1)},${py.toFixed(1)}`;
      })
      .join(" "),
  }));
}

export function renderChart(
  container: HTMLElement,
  series: Series[],
  layout: ChartLayout = DEFAULT_LAYOUT,
): void {
  const ns = "http://www.w3.org/2000/svg";
  container.textContent = "";
  const svg = document.createElementNS(ns, "svg");
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  svg.setAttribute("width", String(layout.width));
  svg.setAttribute("height", String(layout.height));

  const axis = document.createElementNS(ns, "path");
  const m = layout.margin;
  axis.setAttribute(
    "d",
    `M${m},${m} L${m},${layout.height - m} L${layout.width - m},${layout.height - m}`,
  );
  axis.setAttribute("stroke", "#888");
  axis.setAttribute("fill", "none");
  svg.append(axis);

  for (const scaled of scalePoints(series, layout)) {
    const path = document.createElementNS(ns, "path");
    path.setAttribute("d", scaled.path);
    path.setAttribute("stroke", scaled.color);
    path.setAttribute("fill", "none");
    path.setAttribute("stroke-width", "2");
    path.dataset.label = scaled.label;
    svg.append(path);
  }
  container.append(svg);

  const legend = document.createElement("div");
  legend.className = "legend";
  for (const s of series) {
    const entry = document.createElement("span");
    entry.style.color = s.color;
    entry.textContent = s.label;
    legend.append(entry);
  }
  container.append(legend);
}
