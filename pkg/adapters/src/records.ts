import { createHash } from "node:crypto";
import { writeFileSync } from "node:fs";

// Wire shapes for the engine's JSON Lines interchange. `kind` goes first so
// files read the same as engine-written ones; the decoder itself is
// order-agnostic.

export interface WindowSpecWire {
  start_s: number;
  len_s: number;
}

export type SubjectWire =
  | { audio_id: string; window: WindowSpecWire }
  | { caption_id: string; text?: string };

export interface EmbeddingWire {
  kind: "embedding";
  subject: SubjectWire;
  model_id: string;
  dim: number;
  vector: number[];
}

export interface TokenStepWire {
  chosen_token_text: string;
  top_logprobs: Record<string, number>;
}

export interface RawGenWire {
  kind: "raw_gen";
  model_id: string;
  prompt_hash: string;
  greedy_text: string;
  token_steps: TokenStepWire[];
}

export interface DigitDistWire {
  kind: "digit_dist";
  places: [Record<string, number>, Record<string, number>];
  provenance: { greedy_text: string; model_id: string };
}

export type RecordWire = EmbeddingWire | RawGenWire | DigitDistWire;

export function embeddingRecord(
  subject: SubjectWire,
  modelId: string,
  vector: number[]
): EmbeddingWire {
  return { kind: "embedding", subject, model_id: modelId, dim: vector.length, vector };
}

export function rawGenRecord(
  modelId: string,
  promptHash: string,
  greedyText: string,
  steps: TokenStepWire[]
): RawGenWire {
  return {
    kind: "raw_gen",
    model_id: modelId,
    prompt_hash: promptHash,
    greedy_text: greedyText,
    token_steps: steps,
  };
}

export function digitDistRecord(
  places: [Record<string, number>, Record<string, number>],
  greedyText: string,
  modelId: string
): DigitDistWire {
  return { kind: "digit_dist", places, provenance: { greedy_text: greedyText, model_id: modelId } };
}

export function promptHash(prompt: string): string {
  return createHash("sha256").update(prompt, "utf-8").digest("hex");
}

export function toJsonl(records: RecordWire[]): string {
  return records.map((r) => JSON.stringify(r)).join("\n") + "\n";
}

export function writeJsonl(path: string, records: RecordWire[]): void {
  if (records.length === 0) {
    throw new Error(`refusing to write an empty export to ${path}`);
  }
  writeFileSync(path, toJsonl(records), "utf-8");
}
