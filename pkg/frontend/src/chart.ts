const SVG_NS = "http://www.w3.org/2000/svg";
const WEEK_MARKERS = [1, 4, 10];

const WIDTH = 640;
const HEIGHT = 360;
const MARGIN = { top: 12, right: 16, bottom: 36, left: 44 };

/**
 * Step plot of the predicted survival curve, y fixed to [0, 1], with
 * reference markers at 1, 4 and 10 weeks.  Values come straight from the
 * service response; this module only maps them to pixels.
 */
export function renderCurve(container: HTMLElement, times: number[], survival: number[]): void {
  container.replaceChildren();
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("role", "img");
  svg.dataset.points = String(times.length);

  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const tMax = times.length ? times[times.length - 1] : 1;
  const x = (t: number) => MARGIN.left + (t / tMax) * innerW;
  const y = (s: number) => MARGIN.top + (1 - s) * innerH;

  for (const [value, label] of [
    [1, "1.0"],
    [0.5, "0.5"],
    [0, "0.0"],
  ] as const) {
    const grid = document.createElementNS(SVG_NS, "line");
    grid.setAttribute("x1", String(MARGIN.left));
    grid.setAttribute("x2", String(WIDTH - MARGIN.right));
    grid.setAttribute("y1", String(y(value)));
    grid.setAttribute("y2", String(y(value)));
    grid.setAttribute("class", "gridline");
    svg.appendChild(grid);
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(MARGIN.left - 6));
    text.setAttribute("y", String(y(value) + 4));
    text.setAttribute("text-anchor", "end");
    text.setAttribute("class", "axis-label");
    text.textContent = label;
    svg.appendChild(text);
  }

  for (const week of WEEK_MARKERS) {
    if (week > tMax) continue;
    const marker = document.createElementNS(SVG_NS, "line");
    marker.setAttribute("x1", String(x(week)));
    marker.setAttribute("x2", String(x(week)));
    marker.setAttribute("y1", String(MARGIN.top));
    marker.setAttribute("y2", String(HEIGHT - MARGIN.bottom));
    marker.setAttribute("class", "week-marker");
    marker.dataset.week = String(week);
    svg.appendChild(marker);
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(x(week) + 3));
    text.setAttribute("y", String(HEIGHT - MARGIN.bottom + 14));
    text.setAttribute("class", "axis-label");
    text.textContent = `${week}w`;
    svg.appendChild(text);
  }

  // right-continuous steps: hold each survival value until the next time
  let d = `M ${x(0)} ${y(1)}`;
  for (let i = 0; i < times.length; i += 1) {
    d += ` H ${x(times[i])} V ${y(survival[i])}`;
  }
  if (times.length) d += ` H ${x(tMax)}`;
  const path = document.createElementNS(SVG_NS, "path");
  path.setAttribute("d", d);
  path.setAttribute("class", "curve");
  path.setAttribute("fill", "none");
  svg.appendChild(path);

  const xLabel = document.createElementNS(SVG_NS, "text");
  xLabel.setAttribute("x", String(WIDTH / 2));
  xLabel.setAttribute("y", String(HEIGHT - 6));
  xLabel.setAttribute("text-anchor", "middle");
  xLabel.setAttribute("class", "axis-label");
  xLabel.textContent = "weeks since claim opened";
  svg.appendChild(xLabel);

  container.appendChild(svg);
}
