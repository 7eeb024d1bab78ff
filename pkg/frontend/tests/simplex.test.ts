import { describe, expect, it } from "vitest";

import { entropy, interpolate, normalize, oneHot, setAndRenormalize, uniform } from "../src/simplex.js";

describe("setAndRenormalize", () => {
  it("keeps the vector on the simplex", () => {
    const out = setAndRenormalize([0.5, 0.3, 0.2], 0, 0.8);
    expect(out.reduce((a, b) => a + b, 0)).toBeCloseTo(1, 12);
    expect(out[0]).toBeCloseTo(0.8, 12);
  });

  it("preserves the ratio of untouched entries", () => {
    const out = setAndRenormalize([0.5, 0.3, 0.2], 0, 0.6);
    expect(out[1] / out[2]).toBeCloseTo(0.3 / 0.2, 10);
  });

  it("spreads mass evenly when untouched entries were zero", () => {
    const out = setAndRenormalize([1, 0, 0], 0, 0.4);
    expect(out[1]).toBeCloseTo(0.3, 12);
    expect(out[2]).toBeCloseTo(0.3, 12);
  });

  it("clamps the requested value into [0, 1]", () => {
    const out = setAndRenormalize([0.5, 0.5], 0, 1.7);
    expect(out[0]).toBe(1);
    expect(out[1]).toBe(0);
  });

  it("rejects bad indices", () => {
    expect(() => setAndRenormalize([1, 0], 5, 0.5)).toThrow();
  });
});

describe("helpers", () => {
  it("uniform and oneHot are valid simplex points", () => {
    expect(uniform(4).reduce((a, b) => a + b, 0)).toBeCloseTo(1, 12);
    expect(oneHot(3, 1)).toEqual([0, 1, 0]);
  });

  it("interpolate hits both endpoints", () => {
    const a = [0.7, 0.2, 0.1];
    const b = [0.1, 0.1, 0.8];
    expect(interpolate(a, b, 0)).toEqual(a);
    expect(interpolate(a, b, 1)).toEqual(b);
    const mid = interpolate(a, b, 0.5);
    expect(mid.reduce((x, y) => x + y, 0)).toBeCloseTo(1, 12);
  });

  it("entropy of one-hot is 0 and of uniform is ln K", () => {
    expect(entropy(oneHot(5, 2))).toBe(0);
    expect(entropy(uniform(11))).toBeCloseTo(Math.log(11), 12);
  });

  it("normalize handles zero vectors", () => {
    expect(normalize([0, 0])).toEqual([0.5, 0.5]);
  });
});
