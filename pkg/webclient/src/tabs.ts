// HTML rendering of the eight tabs from server view models. Every number
// shown here comes straight from a view-model field.

import { renderComparativeCircles, renderInteractionCircle } from "./circle.js";
import { renderGlyph } from "./glyph.js";
import { markerColor, severityColor } from "./palette.js";
import { Alert, AlertRow, GlyphData, InteractionGraphVM, TabName } from "./types.js";
import { UiState } from "./state.js";

function esc(text: unknown): string {
  return String(text ?? "").replace(/&/g, "&amp;").replace(/</g, "&lt;")
    .replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function drugName(drug: Record<string, unknown>, mode: "inn" | "trademark"): string {
  return esc(mode === "trademark" ? drug.trademark : drug.inn);
}

function drugNameSpan(drug: Record<string, unknown>, state: UiState): string {
  const marker = drug.marker as string | null;
  const name = drugName(drug, state.displayMode);
  if (marker === "removed") {
    return `<span class="removed" style="color:${markerColor("removed", state.palette)};` +
      `text-decoration:line-through">${name}</span>`;
  }
  if (marker === "added") {
    return `<span class="added" style="color:${markerColor("added", state.palette)}">` +
      `${name}</span>`;
  }
  return `<span>${name}</span>`;
}

function renderPatientData(view: any, state: UiState): string {
  const drugs = (view.drugs as Record<string, unknown>[]).map((d) => {
    const indication = d.missing_indication
      ? `<span class="missing-indication">Indication???</span>`
      : esc(d.indication ?? "");
    return `<tr><td>${drugName(d, state.displayMode)}</td>` +
      `<td>${esc(d.posology_text)}</td><td>${indication}</td>` +
      `<td class="source">${esc(d.source)}</td></tr>`;
  }).join("");
  const conditions = (view.conditions as Record<string, unknown>[]).map((c) =>
    `<tr><td>${esc(c.code)}</td><td>${c.present ? "present" : "absent"}</td>` +
    `<td class="source">${esc(c.source)}</td></tr>`).join("");
  const labs = (view.labs as Record<string, unknown>[]).map((l) =>
    `<tr><td>${esc(l.code)}</td><td>${esc(l.value)} ${esc(l.unit)}</td>` +
    `<td class="source">${esc(l.source)}</td></tr>`).join("");
  return `<section class="patient-data">
    <h2>Drugs</h2><table>${drugs}</table>
    <h2>Clinical conditions</h2><table>${conditions}</table>
    <h2>Lab results</h2><table>${labs}</table>
  </section>`;
}

function renderInterview(view: any): string {
  const items = (view.items as Record<string, unknown>[]).map((item) => {
    const refinements = (item.refinements as Record<string, unknown>[])
      .map((r) => `<option value="${esc(r.code)}">${esc(r.label)}</option>`).join("");
    return `<li class="question" data-concept="${esc(item.concept)}"` +
      ` data-category="${esc(item.category_index)}">` +
      `<label><input type="checkbox"/> ${esc(item.label)}</label>` +
      (refinements ? `<select class="refinement">${refinements}</select>` : "") +
      `</li>`;
  }).join("");
  const problems = (view.problems as Record<string, unknown>[]).map((p) =>
    `<li>${esc(p.category)}: ${esc(p.note || p.effect || "")}</li>`).join("");
  return `<section class="interview">
    <h2>Treatment problems</h2><ul>${problems}</ul>
    <h2>Conditions to ask</h2><ul class="questions">${items}</ul>
  </section>`;
}

function renderPosologies(view: any, state: UiState): string {
  const phase = view.comparative ? view.post : view.pre;
  const rows = (phase.rows as any[]).map((row) => {
    const official = (row.official as any[]).map((entry) =>
      `<div class="official">${esc(entry.text)}` +
      (entry.unverified.length ? ` <em>(unverified: ${esc(entry.unverified.join(", "))})</em>` : "") +
      `</div>`).join("");
    const flags = (row.flags as any[]).map((flag) =>
      `<span class="flag ${esc(flag.kind)}">${esc(flag.detail)}</span>`).join("");
    return `<tr><td>${drugNameSpan(row.drug, state)}</td>` +
      `<td>${esc(row.drug.posology_text)}</td><td>${official}</td><td>${flags}</td></tr>`;
  }).join("");
  const totals = (phase.totals as any[]).map((t) =>
    `<li>${esc(t.principle)}: ${esc(t.total_mg_per_day[0])}-${esc(t.total_mg_per_day[1])} mg/day` +
    (t.complete ? "" : " (incomplete)") + `</li>`).join("");
  return `<section class="posologies"><table>
    <tr><th>drug</th><th>posology</th><th>official</th><th>flags</th></tr>${rows}</table>
    <h2>Day doses per active principle</h2><ul>${totals}</ul></section>`;
}

function renderAdverseEffects(view: any, state: UiState): string {
  const pre = view.glyph_pre as GlyphData;
  const post = view.glyph_post as GlyphData | null;
  const main = renderGlyph(pre, { mode: state.palette, overlay: post });
  const second = post ? renderGlyph(post, { mode: state.palette, overlay: pre }) : "";
  const bars = (view.bars as any[]).map((series) => {
    const rows = (series.rows as any[]).map((row) => {
      const values = (row.values as number[]).map((v) =>
        `<span class="value">${v}</span>`).join(" ");
      return `<li>${row.serious ? "&#9650; " : ""}${esc(row.label)}: ${values}</li>`;
    }).join("");
    return `<div class="series" data-kind="${esc(series.kind)}">` +
      `<h3>${esc(series.kind)}</h3><ul>${rows}</ul></div>`;
  }).join("");
  return `<section class="adverse-effects">
    <div class="glyphs">${main}${second}</div><div class="bars">${bars}</div></section>`;
}

function renderInteractions(view: any, state: UiState): string {
  const pre = view.pre as InteractionGraphVM;
  const circles = view.comparative
    ? renderComparativeCircles(pre, view.post as InteractionGraphVM,
                               { mode: state.palette, displayMode: state.displayMode })
    : renderInteractionCircle(pre, { mode: state.palette, displayMode: state.displayMode });
  const ranked = (view.ranked as any[]).map((entry) =>
    `<li class="ranked" style="color:${severityColor(entry.severity, state.palette)}">` +
    `${esc(entry.name)}: ${esc(entry.recommendation)}` +
    (entry.url ? ` <a href="${esc(entry.url)}">reference</a>` : "") + `</li>`).join("");
  return `<section class="interactions">${circles}<ol class="ranked-list">${ranked}</ol>
  </section>`;
}

function trafficSign(alert: Alert): string {
  const symbol = { stopp_auto: "&#128721;", stopp_semi_auto: "&#9888;", start: "&#9989;" };
  return `<span class="sign ${alert.class}">${symbol[alert.class]}</span>`;
}

function renderStoppStart(view: any, state: UiState): string {
  const rows = (view.rows as AlertRow[]).map((row) => {
    const pre = row.pre_alerts.map((a) =>
      `<div class="alert">${trafficSign(a)} ${esc(a.rule_id)}: ${esc(a.alert_text)}</div>`)
      .join("");
    const post = row.post_alerts.map((a) =>
      `<div class="alert">${trafficSign(a)} ${esc(a.rule_id)}: ${esc(a.alert_text)}</div>`)
      .join("");
    return `<tr><td>${esc(row.drug_name)}</td><td>${pre}</td><td>${post}</td></tr>`;
  }).join("");
  const starts = (view.start_pre as Alert[]).map((a) =>
    `<li>${trafficSign(a)} ${esc(a.rule_id)}: ${esc(a.alert_text)}</li>`).join("");
  return `<section class="stopp-start">
    <table><tr><th>drug</th><th>current</th><th>after review</th></tr>${rows}</table>
    <h2>Recommended additions</h2><ul>${starts}</ul></section>`;
}

function renderPreconizations(view: any, state: UiState): string {
  const display = (view.display as Record<string, unknown>[]).map((d) => {
    const actions = d.marker === "removed" ? "" :
      ` <button data-action="deprescribe" data-drug="${esc(d.drug_id)}">deprescribe</button>`;
    return `<li>${drugNameSpan(d, state)} ${esc(d.posology_text)}${actions}</li>`;
  }).join("");
  const entries = (view.entries as Record<string, unknown>[]).map((p) =>
    `<li>${esc(p.kind)} ${esc(p.drug_id ?? "")} ${esc(p.new_drug_id ?? "")}` +
    ` ${esc(p.free_text ?? "")}` +
    ` <button data-action="cancel-preconization" data-target="${esc(p.item_id)}">cancel</button>` +
    `</li>`).join("");
  return `<section class="preconizations">
    <h2>Treatment</h2><ul>${display}</ul>
    <h2>Preconizations</h2><ol>${entries}</ol>
    ${view.validated
      ? "<p class='validated'>review validated</p>"
      : `<button class="validate" data-action="validate">validate review</button>`}
    </section>`;
}

function renderChat(view: any): string {
  const messages = (view.messages as Record<string, unknown>[]).map((m) =>
    `<li><strong>${esc(m.author)}</strong> (${esc(m.role)}): ${esc(m.text)}</li>`).join("");
  return `<section class="chat"><ul>${messages}</ul>
    <input class="chat-input" placeholder="message"/></section>`;
}

export function renderTab(tab: TabName, view: unknown, state: UiState): string {
  switch (tab) {
    case "patient_data": return renderPatientData(view as any, state);
    case "interview": return renderInterview(view as any);
    case "posologies": return renderPosologies(view as any, state);
    case "adverse_effects": return renderAdverseEffects(view as any, state);
    case "interactions": return renderInteractions(view as any, state);
    case "stopp_start": return renderStoppStart(view as any, state);
    case "preconizations": return renderPreconizations(view as any, state);
    case "chat": return renderChat(view as any);
  }
}

export function renderTabBar(state: UiState): string {
  const labels: Record<TabName, string> = {
    patient_data: "Patient data",
    interview: "Interview",
    posologies: "Posologies",
    adverse_effects: "Adverse effects",
    interactions: "Interactions",
    stopp_start: "STOPP/START",
    preconizations: "Preconizations",
    chat: "Chat",
  };
  return (Object.keys(labels) as TabName[]).map((tab) => {
    const star = state.stars[tab] !== null ? `<span class="star">&#9733;</span>` : "";
    const active = state.activeTab === tab ? " active" : "";
    return `<button class="tab${active}" data-tab="${tab}">${labels[tab]}${star}</button>`;
  }).join("");
}
