// Server view-model types, mirrored from the HTTP API payloads.
// The client renders these numbers as-is and computes no domain values.

export const TABS = [
  "patient_data",
  "interview",
  "posologies",
  "adverse_effects",
  "interactions",
  "stopp_start",
  "preconizations",
  "chat",
] as const;

export type TabName = (typeof TABS)[number];

export interface GlyphData {
  label: string;
  values: number[]; // 13 categories; 1-12 are petals, 13 is the center
  serious_values: number[];
}

export interface GraphNode {
  drug_id: string;
  inn: string;
  trademark: string;
  angle: number; // radians, server-computed
  status: "green" | "orange" | "red";
  grayed: boolean;
  triggering: { code: string; label: string; kind: string }[];
}

export interface GraphArc {
  drug_a: string;
  drug_b: string;
  severity: 1 | 2 | 3 | 4;
  arc_index: number;
  recommendation: string;
  mechanism: string;
  url: string;
}

export interface InteractionGraphVM {
  phase: string;
  nodes: GraphNode[];
  arcs: GraphArc[];
}

export interface Alert {
  rule_id: string;
  action: "stop" | "start";
  drug_id: string | null;
  drug_name: string | null;
  alert_text: string;
  class: "stopp_auto" | "stopp_semi_auto" | "start";
  phase: string;
}

export interface AlertRow {
  pre_drug_id: string | null;
  post_drug_id: string | null;
  drug_name: string;
  pre_alerts: Alert[];
  post_alerts: Alert[];
}

export interface ChangeNotification {
  type: "change";
  patient_id: string;
  revision: number;
  author: string;
  changed_categories: string[];
  dirty: Record<TabName, boolean>;
}

export interface Snapshot {
  patient_id: string;
  revision: number;
  record: Record<string, unknown>;
  views: Record<TabName, unknown>;
}
