// SVG renderings of a queried trajectory. Every payload frame maps to
// exactly one rendered marker; nothing is resampled.

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 420;
const HEIGHT = 220;
const PAD = 38;

function svgElement(width = WIDTH, height = HEIGHT): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  return svg;
}

function scale(values: number[], lo: number, hi: number): (v: number) => number {
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  return (v) => lo + ((v - min) / span) * (hi - lo);
}

function axisLabel(svg: SVGSVGElement, text: string, x: number, y: number, rotate = false) {
  const node = document.createElementNS(SVG_NS, "text");
  node.setAttribute("x", String(x));
  node.setAttribute("y", String(y));
  node.setAttribute("class", "axis-label");
  if (rotate) node.setAttribute("transform", `rotate(-90 ${x} ${y})`);
  node.textContent = text;
  svg.appendChild(node);
}

function timeColor(fraction: number): string {
  // early frames cool, late frames warm
  const hue = 210 - 180 * fraction;
  return `hsl(${hue} 80% 45%)`;
}

export interface PlotSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xs: number[];
  ys: number[];
}

export function renderSeries(spec: PlotSpec): SVGSVGElement {
  const svg = svgElement();
  svg.setAttribute("data-plot", spec.title);
  const sx = scale(spec.xs, PAD, WIDTH - 10);
  const sy = scale(spec.ys, HEIGHT - PAD, 14);

  const path = document.createElementNS(SVG_NS, "polyline");
  path.setAttribute(
    "points",
    spec.xs.map((x, k) => `${sx(x).toFixed(2)},${sy(spec.ys[k]).toFixed(2)}`).join(" "),
  );
  path.setAttribute("class", "series-line");
  svg.appendChild(path);

  spec.xs.forEach((x, k) => {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", sx(x).toFixed(2));
    dot.setAttribute("cy", sy(spec.ys[k]).toFixed(2));
    dot.setAttribute("r", "2");
    dot.setAttribute("fill", timeColor(k / Math.max(1, spec.xs.length - 1)));
    dot.setAttribute("class", "frame-marker");
    svg.appendChild(dot);
  });

  axisLabel(svg, spec.xLabel, WIDTH / 2, HEIGHT - 6);
  axisLabel(svg, spec.yLabel, 12, HEIGHT / 2, true);
  const title = document.createElementNS(SVG_NS, "text");
  title.setAttribute("x", String(WIDTH / 2));
  title.setAttribute("y", "11");
  title.setAttribute("class", "plot-title");
  title.textContent = spec.title;
  svg.appendChild(title);
  return svg;
}

/**
 * Three coordinated views of one trajectory: lateral vs time, longitudinal
 * vs time, and the bird's-eye path with time coloring. Lane boundaries at
 * +-1.75 m are drawn on the lateral views.
 */
export function renderTrajectory(container: HTMLElement, frames: number[][], channelNames: string[]) {
  container.textContent = "";
  const t = frames.map((_, k) => k);
  const lateral = frames.map((f) => f[0]);
  const longitudinal = frames.map((f) => f[1]);

  const lateralPlot = renderSeries({
    title: "Lateral position",
    xLabel: "frame index",
    yLabel: "lateral (m)",
    xs: t,
    ys: lateral,
  });
  markLaneBand(lateralPlot, lateral);
  container.appendChild(lateralPlot);

  container.appendChild(
    renderSeries({
      title: "Longitudinal position",
      xLabel: "frame index",
      yLabel: "longitudinal (m)",
      xs: t,
      ys: longitudinal,
    }),
  );

  if (channelNames.length > 2) {
    container.appendChild(
      renderSeries({
        title: "Relative velocity",
        xLabel: "frame index",
        yLabel: "velocity (m/s)",
        xs: t,
        ys: frames.map((f) => f[2]),
      }),
    );
  }

  const birdsEye = renderSeries({
    title: "Bird's-eye path",
    xLabel: "longitudinal (m)",
    yLabel: "lateral (m)",
    xs: longitudinal,
    ys: lateral,
  });
  markLaneBand(birdsEye, lateral);
  container.appendChild(birdsEye);
}

function markLaneBand(svg: SVGSVGElement, lateralValues: number[]) {
  // dashed guides at the ego-lane boundary where they fall inside the range
  const min = Math.min(...lateralValues);
  const max = Math.max(...lateralValues);
  const sy = scale(lateralValues, HEIGHT - PAD, 14);
  for (const bound of [-1.75, 1.75]) {
    if (bound < min || bound > max) continue;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(PAD));
    line.setAttribute("x2", String(WIDTH - 10));
    line.setAttribute("y1", sy(bound).toFixed(2));
    line.setAttribute("y2", sy(bound).toFixed(2));
    line.setAttribute("class", "lane-bound");
    svg.appendChild(line);
  }
}

export function renderMetricCurve(container: HTMLElement, steps: number[], values: number[], label: string) {
  container.textContent = "";
  if (steps.length === 0) return;
  const svg = svgElement(WIDTH, 180);
  svg.setAttribute("data-plot", "metric");
  const sx = scale(steps, PAD, WIDTH - 10);
  const ys = values.length > 1 ? values : [...values, ...values];
  const sy = scale(ys, 180 - PAD, 12);
  const path = document.createElementNS(SVG_NS, "polyline");
  path.setAttribute(
    "points",
    steps.map((s, k) => `${sx(s).toFixed(2)},${sy(values[k]).toFixed(2)}`).join(" "),
  );
  path.setAttribute("class", "metric-line");
  svg.appendChild(path);
  axisLabel(svg, "queries", WIDTH / 2, 174);
  axisLabel(svg, label, 12, 90, true);
  container.appendChild(svg);
}
