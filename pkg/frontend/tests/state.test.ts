import { describe, expect, it } from "vitest";
import { QUALITY_DIMENSIONS } from "../src/rubric.js";
import { TaskState } from "../src/state.js";
import type { RatingTask } from "../src/types.js";

function makeTask(scale: number): RatingTask {
  const aliases = "ABCDEF".slice(0, scale).split("");
  return {
    task_id: `s1:r1:case-0`,
    rater_id: "r1",
    case_id: "case-0",
    scale,
    language: "zh",
    presented: aliases.map((c) => ({
      alias: `Report ${c}`,
      findings: `findings ${c}`,
      impression: `impression ${c}`,
    })),
  };
}

function fillQuality(state: TaskState): void {
  for (const alias of state.aliases) {
    for (const dim of QUALITY_DIMENSIONS) {
      state.setQuality(alias, dim, 2);
    }
  }
}

/** Minimal seeded RNG so randomized sequences are reproducible. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("TaskState", () => {
  it("starts with served order and is incomplete", () => {
    const state = new TaskState(makeTask(4));
    expect(state.aliases).toEqual([
      "Report A",
      "Report B",
      "Report C",
      "Report D",
    ]);
    expect(state.isComplete()).toBe(false);
    expect(() => state.toPayload()).toThrow(/incomplete/);
  });

  it("produces permutation ranks after arbitrary moves", () => {
    const state = new TaskState(makeTask(4));
    state.moveAlias("Report D", 0);
    state.moveAlias("Report A", 3);
    state.moveAlias("Report B", 1);
    fillQuality(state);
    const payload = state.toPayload();
    expect(Object.values(payload.ranks).sort()).toEqual([1, 2, 3, 4]);
    expect(payload.ranks["Report D"]).toBe(1);
    expect(payload.ranks["Report A"]).toBe(4);
  });

  it("randomized interaction sequences always yield valid payloads", () => {
    for (let seed = 0; seed < 50; seed++) {
      const rng = mulberry32(seed);
      const scale = rng() < 0.5 ? 4 : 6;
      const state = new TaskState(makeTask(scale));
      const steps = 5 + Math.floor(rng() * 40);
      for (let s = 0; s < steps; s++) {
        const alias = state.aliases[Math.floor(rng() * scale)];
        const action = rng();
        if (action < 0.4) {
          state.moveAlias(alias, Math.floor(rng() * scale));
        } else if (action < 0.7) {
          state.setQuality(
            alias,
            QUALITY_DIMENSIONS[Math.floor(rng() * 4)],
            1 + Math.floor(rng() * 4),
          );
        } else if (action < 0.85) {
          state.addError(
            alias,
            rng() < 0.5 ? "findings" : "impression",
            rng() < 0.5 ? "omission" : "incorrection",
          );
        } else {
          const n = state.getErrors(alias).length;
          if (n > 0) {
            const idx = Math.floor(rng() * n);
            if (rng() < 0.5) state.toggleSignificant(alias, idx);
            else state.removeError(alias, idx);
          }
        }
      }
      fillQuality(state);
      const payload = state.toPayload();
      const ranks = Object.values(payload.ranks).sort((a, b) => a - b);
      expect(ranks).toEqual(
        Array.from({ length: scale }, (_, i) => i + 1),
      );
      expect(Object.keys(payload.quality)).toHaveLength(scale);
      for (const scores of Object.values(payload.quality)) {
        expect(Object.keys(scores).sort()).toEqual(
          [...QUALITY_DIMENSIONS].sort(),
        );
        for (const v of Object.values(scores)) {
          expect(Number.isInteger(v)).toBe(true);
          expect(v).toBeGreaterThanOrEqual(1);
          expect(v).toBeLessThanOrEqual(4);
        }
      }
      for (const items of Object.values(payload.errors)) {
        for (const item of items) {
          expect(["findings", "impression"]).toContain(item.section);
          expect(["omission", "incorrection"]).toContain(item.kind);
          expect(typeof item.clinically_significant).toBe("boolean");
        }
      }
    }
  });

  it("rejects out-of-range scores and unknown inputs", () => {
    const state = new TaskState(makeTask(4));
    expect(() => state.setQuality("Report A", "coherence", 0)).toThrow(/1\.\.4/);
    expect(() => state.setQuality("Report A", "coherence", 5)).toThrow(/1\.\.4/);
    expect(() => state.setQuality("Report A", "coherence", 2.5)).toThrow(/1\.\.4/);
    expect(() => state.setQuality("Report A", "vibes", 2)).toThrow(/dimension/);
    expect(() => state.setQuality("Report Z", "coherence", 2)).toThrow(/alias/);
    expect(() => state.moveAlias("Report A", 9)).toThrow(/range/);
    expect(() => state.removeError("Report A", 0)).toThrow(/index/);
  });

  it("tracks error items with significance toggles", () => {
    const state = new TaskState(makeTask(4));
    const idx = state.addError("Report B", "impression", "incorrection");
    expect(state.getErrors("Report B")[idx].clinically_significant).toBe(false);
    state.toggleSignificant("Report B", idx);
    expect(state.getErrors("Report B")[idx].clinically_significant).toBe(true);
    state.removeError("Report B", idx);
    expect(state.getErrors("Report B")).toHaveLength(0);
  });
});
