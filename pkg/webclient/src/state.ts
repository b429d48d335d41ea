// Client UI state: active tab, display toggles, per-tab red stars and the
// revision tracking that drives lazy refetches.

import { ChangeNotification, TABS, TabName } from "./types.js";
import { PaletteMode } from "./palette.js";

export interface UiState {
  activeTab: TabName;
  displayMode: "inn" | "trademark";
  palette: PaletteMode;
  revision: number;
  // revision that set the star, per tab; null = no star
  stars: Record<TabName, number | null>;
  connection: "connecting" | "open" | "closed";
}

export function initialState(revision: number): UiState {
  const stars = Object.fromEntries(TABS.map((t) => [t, null])) as Record<TabName, number | null>;
  return {
    activeTab: "patient_data",
    displayMode: "inn",
    palette: "color",
    revision,
    stars,
    connection: "connecting",
  };
}

export interface NotificationOutcome {
  resyncNeeded: boolean; // a revision gap: the client missed notifications
}

export function applyNotification(state: UiState,
                                  frame: ChangeNotification): NotificationOutcome {
  if (frame.revision > state.revision + 1) {
    return { resyncNeeded: true };
  }
  if (frame.revision <= state.revision) {
    return { resyncNeeded: false }; // duplicate or own-change echo, nothing to do
  }
  state.revision = frame.revision;
  for (const tab of TABS) {
    if (frame.dirty[tab]) {
      state.stars[tab] = frame.revision;
    }
  }
  return { resyncNeeded: false };
}

export interface OpenTabOutcome {
  refetch: boolean; // the tab content is stale and must be re-fetched
}

export function openTab(state: UiState, tab: TabName): OpenTabOutcome {
  state.activeTab = tab;
  const star = state.stars[tab];
  if (star !== null && state.revision >= star) {
    state.stars[tab] = null; // opened at (or past) the revision that set it
    return { refetch: true };
  }
  return { refetch: false };
}

export function resync(state: UiState, revision: number): void {
  // after a full snapshot refetch every tab is fresh again
  state.revision = revision;
  for (const tab of TABS) state.stars[tab] = null;
}
