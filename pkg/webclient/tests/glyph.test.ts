import { describe, expect, it } from "vitest";

import { renderGlyph } from "../src/glyph.js";
import { GlyphData } from "../src/types.js";

function glyph(values: number[], serious: number[], label = "pre_mr"): GlyphData {
  return { label, values, serious_values: serious };
}

const SAMPLE = glyph(
  [0.6, 0.2, 0.01, 1.3, 0.1, 0.5, 0.7, 0.61, 0.1, 0.02, 0.001, 0.05, 0.52],
  [0.1, 0.0, 0.001, 0.2, 0.05, 0.3, 0.0, 0.0, 0.0, 0.0, 0.001, 0.01, 0.0],
);

const OTHER = glyph(
  [0.3, 0.2, 0.0, 0.9, 0.1, 0.4, 0.2, 0.11, 0.1, 0.02, 0.0, 0.05, 0.3],
  [0.05, 0.0, 0.0, 0.2, 0.0, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
  "post_mr",
);

function paths(svg: string, cls: string): string[] {
  const out: string[] = [];
  const re = new RegExp(`<path class="${cls}"[^>]*\\bd="([^"]+)"`, "g");
  for (const match of svg.matchAll(re)) out.push(match[1]);
  return out;
}

function outerRadius(d: string): number {
  const match = d.match(/A ([0-9.]+) /);
  if (!match) throw new Error(`no arc in ${d}`);
  return parseFloat(match[1]);
}

function circleRadius(svg: string, cls: string): number {
  const match = svg.match(new RegExp(`<circle class="${cls}" r="([0-9.]+)"`));
  if (!match) throw new Error(`no ${cls} circle`);
  return parseFloat(match[1]);
}

describe("flower glyph", () => {
  it("renders 12 petals plus the central region", () => {
    const svg = renderGlyph(SAMPLE);
    expect(paths(svg, "petal")).toHaveLength(12);
    expect(paths(svg, "petal-serious")).toHaveLength(12);
    expect(svg).toContain('<circle class="center"');
    expect(svg).toContain('<circle class="center-serious"');
  });

  it("renders zero-length petals and empty center for an all-zero glyph", () => {
    const svg = renderGlyph(glyph(new Array(13).fill(0), new Array(13).fill(0)));
    for (const d of paths(svg, "petal")) {
      expect(outerRadius(d)).toBeCloseTo(14, 5); // inner radius = zero length
    }
    expect(circleRadius(svg, "center")).toBe(0);
  });

  it("keeps the serious inner region within the petal extent", () => {
    const svg = renderGlyph(SAMPLE);
    const petals = paths(svg, "petal").map(outerRadius);
    const serious = paths(svg, "petal-serious").map(outerRadius);
    for (let i = 0; i < 12; i++) {
      expect(serious[i]).toBeLessThanOrEqual(petals[i] + 1e-9);
    }
    expect(circleRadius(svg, "center-serious"))
      .toBeLessThanOrEqual(circleRadius(svg, "center"));
  });

  it("fills the whole petal when serious equals total", () => {
    const values = [0.4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0.2];
    const svg = renderGlyph(glyph(values, [...values]));
    expect(paths(svg, "petal")[0]).toBe(paths(svg, "petal-serious")[0]);
    expect(circleRadius(svg, "center")).toBe(circleRadius(svg, "center-serious"));
  });

  it("hover overlay geometry equals the other phase's own glyph", () => {
    const withOverlay = renderGlyph(SAMPLE, { overlay: OTHER });
    const otherOwn = renderGlyph(OTHER, { overlay: SAMPLE });
    expect(paths(withOverlay, "overlay")).toEqual(paths(otherOwn, "petal"));
    const overlayCenter = withOverlay.match(/<circle class="overlay-center" r="([0-9.]+)"/);
    expect(overlayCenter?.[1]).toBe(String(circleRadius(otherOwn, "center").toFixed(2)));
  });

  it("palette toggle changes only color attributes", () => {
    const color = renderGlyph(SAMPLE, { mode: "color" });
    const gray = renderGlyph(SAMPLE, { mode: "color_blind" });
    expect(color).not.toBe(gray);
    const strip = (svg: string) =>
      svg.replace(/ (?:fill|stroke)="[^"]*"/g, "");
    expect(strip(color)).toBe(strip(gray));
  });

  it("is deterministic", () => {
    expect(renderGlyph(SAMPLE, { overlay: OTHER })).toBe(
      renderGlyph(SAMPLE, { overlay: OTHER }));
  });
});
