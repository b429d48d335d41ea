// Bootstrap: connect to the service, render the tab bar and active tab,
// keep stars in sync with pushed notifications.

import { ApiClient } from "./api.js";
import { LiveSync } from "./sync.js";
import { applyNotification, initialState, openTab, resync, UiState } from "./state.js";
import { renderTab, renderTabBar } from "./tabs.js";
import { Snapshot, TabName } from "./types.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

export async function start(root: HTMLElement): Promise<void> {
  const patientId = param("patient", "demo");
  const api = new ApiClient({
    baseUrl: param("server", window.location.origin),
    token: param("token", "pharmacist-token"),
  });

  let snapshot: Snapshot = await api.openPatient(patientId);
  const state: UiState = initialState(snapshot.revision);

  function redraw(): void {
    const bar = root.querySelector(".tab-bar")!;
    bar.innerHTML = renderTabBar(state);
    const pane = root.querySelector(".tab-pane")!;
    pane.innerHTML = renderTab(state.activeTab, snapshot.views[state.activeTab], state);
  }

  async function fullResync(): Promise<void> {
    snapshot = await api.openPatient(patientId);
    resync(state, snapshot.revision);
    redraw();
  }

  root.innerHTML = `
    <header>
      <label><input type="checkbox" id="toggle-trademark"/> trademark names</label>
      <label><input type="checkbox" id="toggle-palette"/> color-blind palette</label>
      <span class="connection"></span>
    </header>
    <nav class="tab-bar"></nav>
    <main class="tab-pane"></main>
  `;

  root.addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    const button = target.closest(".tab") as HTMLElement | null;
    if (button) {
      const tab = button.dataset.tab as TabName;
      const outcome = openTab(state, tab);
      if (outcome.refetch) {
        const fresh = await api.fetchView(patientId, tab);
        (snapshot.views as Record<string, unknown>)[tab] = fresh.view;
      }
      redraw();
      return;
    }
    const action = (target.closest("[data-action]") as HTMLElement | null)?.dataset;
    if (!action) return;
    if (action.action === "deprescribe" && action.drug) {
      await api.submitChange(patientId, {
        base_revision: state.revision, category: "preconizations", op: "add",
        data: { kind: "deprescribe", drug_id: action.drug },
        origin_tab: "preconizations",
      });
    } else if (action.action === "cancel-preconization" && action.target) {
      await api.submitChange(patientId, {
        base_revision: state.revision, category: "preconizations", op: "add",
        data: { kind: "cancel", target_preconization_id: action.target },
        origin_tab: "preconizations",
      });
    } else if (action.action === "validate") {
      await api.validate(patientId);
    } else {
      return;
    }
    await fullResync(); // own edits: pull the fresh snapshot right away
  });
  root.addEventListener("keydown", async (event) => {
    const target = event.target as HTMLInputElement;
    if (target.classList?.contains("chat-input") && (event as KeyboardEvent).key === "Enter"
        && target.value.trim()) {
      await api.postChat(patientId, target.value.trim());
      target.value = "";
      await fullResync();
    }
  });
  root.querySelector("#toggle-trademark")!.addEventListener("change", (event) => {
    state.displayMode = (event.target as HTMLInputElement).checked ? "trademark" : "inn";
    redraw();
  });
  root.querySelector("#toggle-palette")!.addEventListener("change", (event) => {
    state.palette = (event.target as HTMLInputElement).checked ? "color_blind" : "color";
    redraw();
  });

  const sync = new LiveSync(
    () => new WebSocket(api.watchUrl(patientId)) as unknown as
      import("./sync.js").SocketLike,
    {
      onNotification(frame) {
        if (applyNotification(state, frame).resyncNeeded) {
          void fullResync();
        } else {
          redraw();
        }
      },
      onResyncNeeded() {
        void fullResync();
      },
      onStatus(status) {
        state.connection = status;
        const el = root.querySelector(".connection");
        if (el) el.textContent = status;
      },
    },
  );
  sync.connect();
  redraw();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void start(document.getElementById("app")!);
}
