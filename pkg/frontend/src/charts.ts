/** Live training charts: two series (train/validation) per panel, one
 * point appended per epoch event. Rendered as SVG polylines so every
 * received point stays addressable; values plot exactly as received. */

const WIDTH = 280;
const HEIGHT = 160;
const PAD = { left: 34, right: 8, top: 20, bottom: 22 };
const PLOT_W = WIDTH - PAD.left - PAD.right;
const PLOT_H = HEIGHT - PAD.top - PAD.bottom;
const SVG_NS = "http://www.w3.org/2000/svg";

export interface ChartPoint {
  epoch: number;
  train: number;
  validation: number;
}

export class MetricChart {
  readonly svg: SVGSVGElement;
  private points: ChartPoint[] = [];
  private trainLine: SVGPolylineElement;
  private valLine: SVGPolylineElement;
  private maxEpoch = 1;

  /** fixedMax pins the y-axis (accuracy uses 1); otherwise it auto-scales. */
  constructor(
    doc: Document,
    readonly title: string,
    readonly fixedMax: number | null = null,
  ) {
    this.svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
    this.svg.setAttribute("width", String(WIDTH));
    this.svg.setAttribute("height", String(HEIGHT));
    this.svg.setAttribute("role", "img");

    const caption = doc.createElementNS(SVG_NS, "text");
    caption.setAttribute("x", String(WIDTH / 2));
    caption.setAttribute("y", "13");
    caption.setAttribute("text-anchor", "middle");
    caption.setAttribute("class", "chart-title");
    caption.textContent = title;
    this.svg.appendChild(caption);

    const axis = doc.createElementNS(SVG_NS, "path");
    axis.setAttribute(
      "d",
      `M ${PAD.left} ${PAD.top} V ${PAD.top + PLOT_H} H ${PAD.left + PLOT_W}`,
    );
    axis.setAttribute("class", "chart-axis");
    axis.setAttribute("fill", "none");
    this.svg.appendChild(axis);

    this.trainLine = doc.createElementNS(SVG_NS, "polyline") as SVGPolylineElement;
    this.trainLine.setAttribute("class", "series-train");
    this.trainLine.setAttribute("fill", "none");
    this.valLine = doc.createElementNS(SVG_NS, "polyline") as SVGPolylineElement;
    this.valLine.setAttribute("class", "series-validation");
    this.valLine.setAttribute("fill", "none");
    this.svg.appendChild(this.trainLine);
    this.svg.appendChild(this.valLine);
  }

  reset(expectedEpochs: number): void {
    this.points = [];
    this.maxEpoch = Math.max(1, expectedEpochs);
    this.render();
  }

  append(point: ChartPoint): void {
    this.points.push(point);
    this.maxEpoch = Math.max(this.maxEpoch, point.epoch);
    this.render();
  }

  pointCount(): { train: number; validation: number } {
    const count = (line: SVGPolylineElement) => {
      const attr = line.getAttribute("points") ?? "";
      return attr === "" ? 0 : attr.split(" ").length;
    };
    return { train: count(this.trainLine), validation: count(this.valLine) };
  }

  lastValues(): ChartPoint | null {
    return this.points.length ? this.points[this.points.length - 1] : null;
  }

  private yMax(): number {
    if (this.fixedMax !== null) return this.fixedMax;
    let max = 0;
    for (const p of this.points) max = Math.max(max, p.train, p.validation);
    return max > 0 ? max : 1;
  }

  private render(): void {
    const yMax = this.yMax();
    const x = (epoch: number) =>
      this.maxEpoch === 1
        ? PAD.left + PLOT_W / 2
        : PAD.left + ((epoch - 1) / (this.maxEpoch - 1)) * PLOT_W;
    const y = (value: number) => PAD.top + PLOT_H - (value / yMax) * PLOT_H;
    const toAttr = (pick: (p: ChartPoint) => number) =>
      this.points.map((p) => `${x(p.epoch).toFixed(2)},${y(pick(p)).toFixed(2)}`).join(" ");
    this.trainLine.setAttribute("points", toAttr((p) => p.train));
    this.valLine.setAttribute("points", toAttr((p) => p.validation));
  }
}
