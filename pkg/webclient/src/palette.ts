// Authoritative palette table (kept in sync with the server fixture).
// Toggling the mode swaps colors only; geometry and ordering never change.

export type PaletteMode = "color" | "color_blind";

interface CategoryEntry {
  index: number;
  name: string;
  color: string;
  color_blind: string;
}

export const CATEGORIES: CategoryEntry[] = [
  { index: 1, name: "cardiac", color: "#e53935", color_blind: "#111111" },
  { index: 2, name: "vascular", color: "#ad1457", color_blind: "#1f1f1f" },
  { index: 3, name: "respiratory", color: "#0277bd", color_blind: "#2e2e2e" },
  { index: 4, name: "gastrointestinal", color: "#ef6c00", color_blind: "#3d3d3d" },
  { index: 5, name: "renal_urinary", color: "#00838f", color_blind: "#4c4c4c" },
  { index: 6, name: "metabolism", color: "#9e9d24", color_blind: "#5b5b5b" },
  { index: 7, name: "nervous_system", color: "#5e35b1", color_blind: "#6a6a6a" },
  { index: 8, name: "psychiatric", color: "#8e24aa", color_blind: "#797979" },
  { index: 9, name: "musculoskeletal", color: "#6d4c41", color_blind: "#888888" },
  { index: 10, name: "skin", color: "#f9a825", color_blind: "#979797" },
  { index: 11, name: "blood_immune", color: "#b71c1c", color_blind: "#a6a6a6" },
  { index: 12, name: "injury_falls", color: "#455a64", color_blind: "#b5b5b5" },
  { index: 13, name: "unclassified", color: "#9e9e9e", color_blind: "#c4c4c4" },
];

const SEVERITIES: Record<number, { color: string; color_blind: string }> = {
  1: { color: "#fdd835", color_blind: "#c9c9c9" },
  2: { color: "#fb8c00", color_blind: "#8c8c8c" },
  3: { color: "#e53935", color_blind: "#4d4d4d" },
  4: { color: "#8e0000", color_blind: "#000000" },
};

const STATUSES: Record<string, { color: string; color_blind: string }> = {
  green: { color: "#2e7d32", color_blind: "#bfbfbf" },
  orange: { color: "#ef6c00", color_blind: "#7a7a7a" },
  red: { color: "#c62828", color_blind: "#1a1a1a" },
};

const MARKERS: Record<string, { color: string; color_blind: string }> = {
  added: { color: "#1565c0", color_blind: "#555555" },
  removed: { color: "#c62828", color_blind: "#000000" },
};

export function categoryColor(index: number, mode: PaletteMode): string {
  const entry = CATEGORIES.find((c) => c.index === index) ?? CATEGORIES[12];
  return mode === "color_blind" ? entry.color_blind : entry.color;
}

export function severityColor(severity: number, mode: PaletteMode): string {
  const entry = SEVERITIES[severity] ?? SEVERITIES[1];
  return mode === "color_blind" ? entry.color_blind : entry.color;
}

export function statusColor(status: string, mode: PaletteMode): string {
  const entry = STATUSES[status] ?? STATUSES.green;
  return mode === "color_blind" ? entry.color_blind : entry.color;
}

export function markerColor(marker: string, mode: PaletteMode): string {
  const entry = MARKERS[marker] ?? MARKERS.added;
  return mode === "color_blind" ? entry.color_blind : entry.color;
}
