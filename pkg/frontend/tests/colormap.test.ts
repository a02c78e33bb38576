import { describe, expect, it } from "vitest";

import { colorRank, makeScale, rankToRgb, valueToRgb } from "../src/colormap.js";

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

describe("color scale", () => {
  it("rejects inverted scales", () => {
    expect(() => makeScale(-10, -10)).toThrow();
    expect(() => makeScale(0, -5)).toThrow();
  });

  it("is monotone over 1000 random value pairs", () => {
    const rand = mulberry32(42);
    const scale = makeScale(-113, -13);
    for (let i = 0; i < 1000; i++) {
      const a = -113 + 100 * rand();
      const b = -113 + 100 * rand();
      const [lo, hi] = a <= b ? [a, b] : [b, a];
      expect(colorRank(scale, hi)).toBeGreaterThanOrEqual(colorRank(scale, lo));
    }
  });

  it("maps uniform values to a uniform color", () => {
    const scale = makeScale(-100, 0);
    const color = valueToRgb(scale, -40);
    for (let i = 0; i < 10; i++) {
      expect(valueToRgb(scale, -40)).toEqual(color);
    }
  });

  it("hits the exact endpoint colors at the scale endpoints", () => {
    const scale = makeScale(-90, -20);
    expect(valueToRgb(scale, -90)).toEqual(rankToRgb(0));
    expect(valueToRgb(scale, -20)).toEqual(rankToRgb(1));
    expect(rankToRgb(0)).toEqual([13, 8, 135]);
    expect(rankToRgb(1)).toEqual([240, 249, 33]);
  });

  it("clamps values outside the scale", () => {
    const scale = makeScale(-50, -10);
    expect(colorRank(scale, -500)).toBe(0);
    expect(colorRank(scale, 100)).toBe(1);
  });
});
