import { describe, expect, it } from "vitest";

import {
  bandPath,
  chartSvg,
  dayNumber,
  linearScale,
  linePath,
} from "../src/chart.js";
import type { SeriesView } from "../src/view.js";

function series(patch: Partial<SeriesView> = {}): SeriesView {
  const central = [10, 20, 30, 40];
  return {
    name: "base forecast",
    color: "#1b9e77",
    band: {
      central,
      lower: central.map((v) => v - 5),
      upper: central.map((v) => v + 5),
    },
    dates: ["2021-01-01", "2021-01-02", "2021-01-03", "2021-01-04"],
    showInterval: true,
    risk: null,
    ...patch,
  };
}

describe("scales and paths", () => {
  it("maps a domain onto a pixel range linearly", () => {
    const s = linearScale([0, 10], [100, 200]);
    expect(s(0)).toBe(100);
    expect(s(5)).toBe(150);
    expect(s(10)).toBe(200);
  });

  it("degenerate domains do not divide by zero", () => {
    const s = linearScale([3, 3], [0, 100]);
    expect(Number.isFinite(s(3))).toBe(true);
  });

  it("builds a move-then-line path", () => {
    expect(linePath([0, 10, 20], [5, 15, 2.04]))
      .toBe("M0.0,5.0L10.0,15.0L20.0,2.0");
  });

  it("closes the interval polygon back along the lower edge", () => {
    expect(bandPath([0, 10], [20, 22], [5, 6]))
      .toBe("M0.0,5.0L10.0,6.0L10.0,22.0L0.0,20.0Z");
    expect(bandPath([], [], [])).toBe("");
  });

  it("counts days from the epoch in UTC", () => {
    expect(dayNumber("1970-01-01")).toBe(0);
    expect(dayNumber("1970-01-02")).toBe(1);
    expect(dayNumber("2021-01-02") - dayNumber("2021-01-01")).toBe(1);
  });
});

describe("chartSvg", () => {
  it("renders one line per series plus a band for intervals", () => {
    const svg = chartSvg([series(), series({
      name: "what-if", color: "#d95f02", showInterval: false,
    })]);
    expect(svg.match(/class="series"/g)).toHaveLength(2);
    expect(svg.match(/class="interval"/g)).toHaveLength(1);
    expect(svg).toContain('stroke="#d95f02"');
    expect(svg).toContain("<title>what-if</title>");
  });

  it("is just an empty frame with nothing to plot", () => {
    const svg = chartSvg([]);
    expect(svg).toContain("<svg");
    expect(svg).not.toContain("<path");
  });

  it("draws the train-end divider when asked", () => {
    expect(chartSvg([series()], { trainEnd: "2021-01-03" }))
      .toContain('class="divider"');
    expect(chartSvg([series()])).not.toContain('class="divider"');
  });

  it("labels the y axis in converted units", () => {
    // factor 2 doubles the top of the axis (45 -> 90), stretching the ticks
    const plain = chartSvg([series()]);
    const scaled = chartSvg([series()], { yFactor: 2 });
    expect(plain).toContain(">40<");
    expect(plain).not.toContain(">80<");
    expect(scaled).toContain(">80<");
    expect(chartSvg([series()], { yLabel: "cases / 100K" }))
      .toContain("cases / 100K");
  });

  it("sizes the axis from central values when intervals are hidden", () => {
    const wide = series({
      band: { central: [10, 40], lower: [5, 20], upper: [60, 100] },
      dates: ["2021-01-01", "2021-01-02"],
    });
    expect(chartSvg([wide])).toContain(">100<");
    const noBand = chartSvg([{ ...wide, showInterval: false }]);
    expect(noBand).not.toContain(">100<");
    expect(noBand).toContain(">40<");
  });

  it("escapes markup in series names and labels", () => {
    const svg = chartSvg([series({ name: "<script>" })],
      { yLabel: 'a "b" & c' });
    expect(svg).not.toContain("<script>");
    expect(svg).toContain("&lt;script&gt;");
    expect(svg).toContain("&amp;");
  });
});
