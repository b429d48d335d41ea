// Flower glyph renderer: 12 petals (categories 1-12) around a central
// region (category 13). Petal length is proportional to the summed
// frequency, the darker inner region to the serious share. All numbers
// come from the server view model; this file only maps them to geometry.

import { GlyphData } from "./types.js";
import { PaletteMode, categoryColor } from "./palette.js";

const PETAL_INNER = 14; // petals start here, leaving room for the center
const R_MAX = 95;
const CENTER_MAX = 12;
const PETAL_WIDTH_FRACTION = 0.82;

export interface GlyphOptions {
  mode?: PaletteMode;
  overlay?: GlyphData | null; // other phase, drawn as an outline on hover
  id?: string;
}

function fmt(x: number): string {
  return (Object.is(x, -0) ? 0 : x).toFixed(2);
}

function polar(radius: number, angle: number): [number, number] {
  return [radius * Math.cos(angle - Math.PI / 2), radius * Math.sin(angle - Math.PI / 2)];
}

// annular sector between radii ri..ro over angles a0..a1
function sectorPath(a0: number, a1: number, ri: number, ro: number): string {
  const [x0i, y0i] = polar(ri, a0);
  const [x0o, y0o] = polar(ro, a0);
  const [x1o, y1o] = polar(ro, a1);
  const [x1i, y1i] = polar(ri, a1);
  return (
    `M ${fmt(x0i)} ${fmt(y0i)} L ${fmt(x0o)} ${fmt(y0o)} ` +
    `A ${fmt(ro)} ${fmt(ro)} 0 0 1 ${fmt(x1o)} ${fmt(y1o)} ` +
    `L ${fmt(x1i)} ${fmt(y1i)} A ${fmt(ri)} ${fmt(ri)} 0 0 0 ${fmt(x0i)} ${fmt(y0i)} Z`
  );
}

function petalAngles(category: number): [number, number] {
  const step = (2 * Math.PI) / 12;
  const center = (category - 1) * step;
  const half = (step * PETAL_WIDTH_FRACTION) / 2;
  return [center - half, center + half];
}

function sharedScale(glyph: GlyphData, overlay?: GlyphData | null): number {
  let max = 0;
  for (const v of glyph.values) max = Math.max(max, v);
  if (overlay) for (const v of overlay.values) max = Math.max(max, v);
  return max > 0 ? max : 1;
}

function petalRadius(value: number, scale: number): number {
  return PETAL_INNER + (R_MAX - PETAL_INNER) * (value / scale);
}

interface Geometry {
  petals: string[]; // path data per category 1..12
  seriousPetals: string[];
  centerRadius: number;
  centerSeriousRadius: number;
}

export function glyphGeometry(glyph: GlyphData, scale: number): Geometry {
  const petals: string[] = [];
  const seriousPetals: string[] = [];
  for (let category = 1; category <= 12; category++) {
    const [a0, a1] = petalAngles(category);
    petals.push(sectorPath(a0, a1, PETAL_INNER, petalRadius(glyph.values[category - 1], scale)));
    seriousPetals.push(
      sectorPath(a0, a1, PETAL_INNER, petalRadius(glyph.serious_values[category - 1], scale)),
    );
  }
  return {
    petals,
    seriousPetals,
    centerRadius: CENTER_MAX * (glyph.values[12] / scale),
    centerSeriousRadius: CENTER_MAX * (glyph.serious_values[12] / scale),
  };
}

export function renderGlyph(glyph: GlyphData, options: GlyphOptions = {}): string {
  const mode = options.mode ?? "color";
  const scale = sharedScale(glyph, options.overlay);
  const geometry = glyphGeometry(glyph, scale);
  const parts: string[] = [];
  parts.push(
    `<svg class="glyph" viewBox="-100 -100 200 200" data-label="${glyph.label}"` +
      (options.id ? ` id="${options.id}"` : "") +
      ` xmlns="http://www.w3.org/2000/svg">`,
  );
  for (let category = 1; category <= 12; category++) {
    const color = categoryColor(category, mode);
    parts.push(
      `<path class="petal" data-category="${category}" d="${geometry.petals[category - 1]}"` +
        ` fill="${color}" fill-opacity="0.45" stroke="${color}"/>`,
    );
    parts.push(
      `<path class="petal-serious" data-category="${category}"` +
        ` d="${geometry.seriousPetals[category - 1]}" fill="${color}" stroke="none"/>`,
    );
  }
  const centerColor = categoryColor(13, mode);
  parts.push(
    `<circle class="center" r="${fmt(geometry.centerRadius)}" fill="${centerColor}"` +
      ` fill-opacity="0.45" stroke="${centerColor}"/>`,
  );
  parts.push(
    `<circle class="center-serious" r="${fmt(geometry.centerSeriousRadius)}"` +
      ` fill="${centerColor}" stroke="none"/>`,
  );
  if (options.overlay) {
    // the other phase's shape, shown above this glyph while hovering
    const other = glyphGeometry(options.overlay, scale);
    for (let category = 1; category <= 12; category++) {
      parts.push(
        `<path class="overlay" data-category="${category}" d="${other.petals[category - 1]}"` +
          ` fill="none" stroke="#000000" stroke-dasharray="3 2"/>`,
      );
    }
    parts.push(
      `<circle class="overlay-center" r="${fmt(other.centerRadius)}" fill="none"` +
        ` stroke="#000000" stroke-dasharray="3 2"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
