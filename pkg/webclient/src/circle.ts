// Radial interaction view: drug nodes on a circle at server-given angles,
// arcs between interacting drugs colored by severity. Grayed nodes (drugs
// absent from this phase) are dimmed and, by server contract, have no arcs.

import { GraphArc, GraphNode, InteractionGraphVM } from "./types.js";
import { PaletteMode, severityColor, statusColor } from "./palette.js";

const RING_RADIUS = 90;
const NODE_RADIUS = 9;
const GRAYED_FILL = "#cccccc";

export interface CircleOptions {
  mode?: PaletteMode;
  displayMode?: "inn" | "trademark";
}

function fmt(x: number): string {
  return (Object.is(x, -0) ? 0 : x).toFixed(2);
}

function position(angle: number): [number, number] {
  return [
    RING_RADIUS * Math.cos(angle - Math.PI / 2),
    RING_RADIUS * Math.sin(angle - Math.PI / 2),
  ];
}

function arcPath(a: GraphNode, b: GraphNode, arcIndex: number): string {
  const [xa, ya] = position(a.angle);
  const [xb, yb] = position(b.angle);
  // control point: chord midpoint pulled toward the center, shifted
  // perpendicular to the chord per extra arc so multiple interactions of
  // one pair stay visually distinct
  const mx = (xa + xb) / 2;
  const my = (ya + yb) / 2;
  const chord = Math.hypot(xb - xa, yb - ya) || 1;
  const px = -(yb - ya) / chord;
  const py = (xb - xa) / chord;
  const offset = 16 * arcIndex;
  const cx = mx * 0.5 + px * offset;
  const cy = my * 0.5 + py * offset;
  return `M ${fmt(xa)} ${fmt(ya)} Q ${fmt(cx)} ${fmt(cy)} ${fmt(xb)} ${fmt(yb)}`;
}

function renderArc(vm: InteractionGraphVM, arc: GraphArc, mode: PaletteMode): string {
  const a = vm.nodes.find((n) => n.drug_id === arc.drug_a);
  const b = vm.nodes.find((n) => n.drug_id === arc.drug_b);
  if (!a || !b) return "";
  return (
    `<path class="arc" data-pair="${arc.drug_a}|${arc.drug_b}"` +
    ` data-severity="${arc.severity}" data-arc-index="${arc.arc_index}"` +
    ` d="${arcPath(a, b, arc.arc_index)}" fill="none"` +
    ` stroke="${severityColor(arc.severity, mode)}" stroke-width="2.5"/>`
  );
}

function renderNode(node: GraphNode, options: CircleOptions): string {
  const mode = options.mode ?? "color";
  const [x, y] = position(node.angle);
  const label = options.displayMode === "trademark" ? node.trademark : node.inn;
  const fill = node.grayed ? GRAYED_FILL : statusColor(node.status, mode);
  const opacity = node.grayed ? "0.5" : "1";
  const labelOffset = y >= 0 ? NODE_RADIUS + 11 : -(NODE_RADIUS + 5);
  return (
    `<g class="node${node.grayed ? " grayed" : ""}" data-drug="${node.drug_id}"` +
    ` opacity="${opacity}">` +
    `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${NODE_RADIUS}" fill="${fill}"/>` +
    `<text x="${fmt(x)}" y="${fmt(y + labelOffset)}" text-anchor="middle"` +
    ` font-size="8">${label}</text></g>`
  );
}

export function renderInteractionCircle(vm: InteractionGraphVM,
                                        options: CircleOptions = {}): string {
  const mode = options.mode ?? "color";
  const parts: string[] = [];
  parts.push(
    `<svg class="interaction-circle" viewBox="-120 -120 240 240" data-phase="${vm.phase}"` +
      ` xmlns="http://www.w3.org/2000/svg">`,
  );
  for (const arc of vm.arcs) parts.push(renderArc(vm, arc, mode));
  for (const node of vm.nodes) parts.push(renderNode(node, options));
  parts.push("</svg>");
  return parts.join("");
}

export function renderComparativeCircles(pre: InteractionGraphVM, post: InteractionGraphVM,
                                         options: CircleOptions = {}): string {
  return (
    `<div class="comparative-circles">` +
    `<figure><figcaption>current treatment</figcaption>` +
    renderInteractionCircle(pre, options) +
    `</figure>` +
    `<figure><figcaption>after review</figcaption>` +
    renderInteractionCircle(post, options) +
    `</figure></div>`
  );
}
