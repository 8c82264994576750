import { describe, expect, it } from "vitest";
import { decodeServerMessage, encodeMessage } from "../src/protocol.js";

describe("wire codec", () => {
  it("encodes with stable key order", () => {
    const line = encodeMessage({ type: "slot_assign", request_id: 0,
                                 slot: "main", t: 0.05 });
    expect(line).toBe('{"request_id":0,"slot":"main","t":0.05,"type":"slot_assign"}');
  });

  it("round-trips through the server decoder", () => {
    const msg = { type: "snapshot", tick: 3, clock: 0.05, requests: [],
                  announcements: [] };
    expect(decodeServerMessage(JSON.stringify(msg))).toEqual(msg);
  });

  it("rejects untagged messages", () => {
    expect(() => decodeServerMessage('{"tick": 1}')).toThrow();
  });
});
