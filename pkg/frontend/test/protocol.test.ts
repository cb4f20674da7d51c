import { describe, expect, it } from "vitest";

import { humanMoveMessage, joinMessage, parseServerMessage, resetMessage } from "../src/protocol";

describe("client messages", () => {
  it("serializes join/reset/human-move with the schema version", () => {
    expect(JSON.parse(joinMessage())).toEqual({ v: 1, type: "join" });
    expect(JSON.parse(resetMessage())).toEqual({ v: 1, type: "reset" });
    expect(JSON.parse(humanMoveMessage(1, 0))).toEqual({ v: 1, type: "human-move", dx: 1, dy: 0 });
  });
});

describe("parseServerMessage", () => {
  it("accepts well-formed frames", () => {
    const frame = {
      v: 1, type: "state-frame", t: 2.0, human: [1, 1], robot: [2, 1],
      behavior: "lead", distance: 1.0, in_affordance: false, layer: [],
      metrics: { success: false, ambiguity_ratio: 0, discomfort_ratio_p: 0, discomfort_ratio_i: 0 },
    };
    const msg = parseServerMessage(JSON.stringify(frame));
    expect(msg?.type).toBe("state-frame");
  });

  it("accepts scene and trial-end messages", () => {
    const scene = {
      v: 1, type: "scene", width: 4, height: 3, resolution: 0.5,
      occupied: [], goals: [[3, 1]], guide_goal: 0, affordance: [], name: "x",
    };
    expect(parseServerMessage(JSON.stringify(scene))?.type).toBe("scene");
    const end = {
      v: 1, type: "trial-end", outcome: "success",
      metrics: { success: true, ambiguity_ratio: 0, discomfort_ratio_p: 0, discomfort_ratio_i: 0 },
    };
    expect(parseServerMessage(JSON.stringify(end))?.type).toBe("trial-end");
  });

  it("rejects malformed input without throwing", () => {
    expect(parseServerMessage("not json")).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "scene" }))).toBeNull(); // no version
    expect(parseServerMessage(JSON.stringify({ v: 2, type: "scene" }))).toBeNull();
    expect(parseServerMessage(JSON.stringify({ v: 1, type: "mystery" }))).toBeNull();
    expect(parseServerMessage(JSON.stringify({ v: 1, type: "state-frame" }))).toBeNull();
    expect(parseServerMessage("42")).toBeNull();
  });
});
