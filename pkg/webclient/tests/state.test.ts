import { describe, expect, it } from "vitest";

import { applyNotification, initialState, openTab, resync } from "../src/state.js";
import { ChangeNotification, TABS } from "../src/types.js";

function frame(revision: number, dirtyTabs: string[]): ChangeNotification {
  const dirty = Object.fromEntries(TABS.map((t) => [t, dirtyTabs.includes(t)]));
  return { type: "change", patient_id: "demo", revision, author: "other",
           changed_categories: ["drugs"], dirty } as ChangeNotification;
}

describe("ui state", () => {
  it("sets stars exactly on flagged tabs", () => {
    const state = initialState(1);
    const outcome = applyNotification(state, frame(2, ["stopp_start", "posologies"]));
    expect(outcome.resyncNeeded).toBe(false);
    expect(state.stars.stopp_start).toBe(2);
    expect(state.stars.posologies).toBe(2);
    expect(state.stars.chat).toBeNull();
    expect(state.revision).toBe(2);
  });

  it("clears the star when the tab is opened at the revision that set it", () => {
    const state = initialState(1);
    applyNotification(state, frame(2, ["stopp_start"]));
    const outcome = openTab(state, "stopp_start");
    expect(outcome.refetch).toBe(true);
    expect(state.stars.stopp_start).toBeNull();
    // reopening a clean tab needs no refetch
    expect(openTab(state, "stopp_start").refetch).toBe(false);
  });

  it("keeps a star set by a later revision than the one currently shown", () => {
    const state = initialState(1);
    applyNotification(state, frame(2, ["chat"]));
    applyNotification(state, frame(3, ["chat"]));
    expect(state.stars.chat).toBe(3);
  });

  it("flags a revision gap as resync-needed without touching state", () => {
    const state = initialState(3);
    const outcome = applyNotification(state, frame(5, ["chat"]));
    expect(outcome.resyncNeeded).toBe(true);
    expect(state.revision).toBe(3);
    expect(state.stars.chat).toBeNull();
  });

  it("ignores duplicate or stale frames", () => {
    const state = initialState(4);
    expect(applyNotification(state, frame(4, ["chat"])).resyncNeeded).toBe(false);
    expect(state.stars.chat).toBeNull();
  });

  it("resync clears every star and adopts the snapshot revision", () => {
    const state = initialState(1);
    applyNotification(state, frame(2, ["chat", "interview"]));
    resync(state, 9);
    expect(state.revision).toBe(9);
    for (const tab of TABS) expect(state.stars[tab]).toBeNull();
  });
});
