import { describe, expect, it } from "vitest";

import { extractDigitPlaces } from "../src/digits.js";
import type { TokenStepWire } from "../src/records.js";

const step = (text: string, top: Record<string, number>): TokenStepWire => ({
  chosen_token_text: text,
  top_logprobs: top,
});

describe("digit alignment", () => {
  it("reads single-char digit steps", () => {
    const places = extractDigitPlaces([
      step("0", { "0": 0 }),
      step(".", { ".": 0 }),
      step("8", { "8": Math.log(0.7), "9": Math.log(0.3) }),
      step("5", { "5": Math.log(0.6), "4": Math.log(0.4) }),
    ])!;
    expect(places[0]["8"]).toBeCloseTo(0.7, 12);
    expect(places[0]["9"]).toBeCloseTo(0.3, 12);
    expect(places[1]["5"]).toBeCloseTo(0.6, 12);
  });

  it("aligns inside multi-char tokens", () => {
    // "0." then "85": both places come from the one two-char step
    const places = extractDigitPlaces([
      step("0.", { "0.": 0 }),
      step("85", { "85": Math.log(0.9), "90": Math.log(0.1) }),
    ])!;
    expect(places[0]["8"]).toBeCloseTo(0.9, 12);
    expect(places[0]["9"]).toBeCloseTo(0.1, 12);
    expect(places[1]["5"]).toBeCloseTo(0.9, 12);
    expect(places[1]["0"]).toBeCloseTo(0.1, 12);
  });

  it("falls through past the end to the next unconsumed step", () => {
    // greedy text is "0.9", but a further step exists with second-place mass
    const places = extractDigitPlaces([
      step("0.", { "0.": 0 }),
      step("9", { "9": 0 }),
      step("1", { "1": Math.log(0.5), "2": Math.log(0.5) }),
    ])!;
    expect(places[1]["1"]).toBeCloseTo(0.5, 12);
    expect(places[1]["2"]).toBeCloseTo(0.5, 12);
  });

  it("yields zero mass when nothing follows", () => {
    const places = extractDigitPlaces([step("0.", { "0.": 0 }), step("9", { "9": 0 })])!;
    expect(places[0]["9"]).toBeCloseTo(1.0, 12);
    expect(places[1]).toEqual({});
  });

  it("returns null without a decimal point", () => {
    expect(extractDigitPlaces([step("ten", { ten: 0 })])).toBeNull();
    expect(extractDigitPlaces([])).toBeNull();
  });

  it("ignores non-digit candidates at the aligned offset", () => {
    const places = extractDigitPlaces([
      step("0", { "0": 0 }),
      step(".", { ".": 0 }),
      step("7", { "7": Math.log(0.5), x: Math.log(0.3), " 9": Math.log(0.2) }),
      step("5", { "5": 0 }),
    ])!;
    expect(places[0]).toEqual({ "7": expect.closeTo(0.5, 12) });
  });
});
