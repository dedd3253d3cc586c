import type { TokenStepWire } from "./records.js";

// Digit-distribution extraction matching the engine's alignment rule. The
// engine's result is authoritative; this sidecar exists so exports carry a
// ready-made digit_dist next to each raw_gen for consumers that never load
// the engine. Rule: the first '.' in the concatenation of step texts anchors
// character offsets +1 and +2; each offset maps to the covering step and its
// candidates vote with exp(logprob) at the aligned in-token position; an
// offset past the end falls through to the step after the last consumed one
// at position 0 when present, else zero mass.

function digitMass(step: TokenStepWire, charIdx: number): Record<string, number> {
  const out: Record<string, number> = {};
  for (const [tok, lp] of Object.entries(step.top_logprobs)) {
    const ch = tok[charIdx];
    if (ch !== undefined && ch >= "0" && ch <= "9") {
      out[ch] = (out[ch] ?? 0) + Math.exp(lp);
    }
  }
  return out;
}

export function extractDigitPlaces(
  steps: TokenStepWire[]
): [Record<string, number>, Record<string, number>] | null {
  if (steps.length === 0) return null;
  const texts = steps.map((s) => s.chosen_token_text);
  const concat = texts.join("");
  const dot = concat.indexOf(".");
  if (dot < 0) return null;

  const spans: Array<[number, number]> = [];
  let pos = 0;
  for (const t of texts) {
    spans.push([pos, pos + t.length]);
    pos += t.length;
  }
  const coveringStep = (offset: number): number => {
    for (let i = 0; i < spans.length; i++) {
      if (spans[i][0] <= offset && offset < spans[i][1]) return i;
    }
    throw new Error(`offset ${offset} outside trace text`);
  };

  const places: Array<Record<string, number>> = [];
  for (const offset of [dot + 1, dot + 2]) {
    if (offset < concat.length) {
      const i = coveringStep(offset);
      places.push(digitMass(steps[i], offset - spans[i][0]));
    } else {
      const last = coveringStep(concat.length - 1);
      places.push(last + 1 < steps.length ? digitMass(steps[last + 1], 0) : {});
    }
  }
  return [places[0], places[1]];
}
