import { readPrompts } from "./dataset.js";
import { checkManifest, type AdapterManifest } from "./manifest.js";
import { digitDistRecord, promptHash, rawGenRecord, writeJsonl, type RecordWire } from "./records.js";
import { extractDigitPlaces } from "./digits.js";
import { ToyLalm } from "./toyLalm.js";

export interface ExportTracesOptions {
  manifest: AdapterManifest;
  promptsPath: string;
  outPath: string;
  topLogprobsK?: number;
  log?: (msg: string) => void;
}

export interface TraceSummary {
  prompts: number;
  records: number;
  failed: string[];
}

/**
 * Greedy decode each prompt and write the raw_gen record plus a digit_dist
 * sidecar computed with the engine-identical alignment rule. Prompts come
 * from the engine's own export; they are never re-templated here. Per-prompt
 * failures are recorded and the run continues.
 */
export function exportTraces(opts: ExportTracesOptions): TraceSummary {
  const log = opts.log ?? ((m) => console.error(m));
  const k = opts.topLogprobsK ?? opts.manifest.top_logprobs_k ?? 10;
  for (const warning of checkManifest({ ...opts.manifest, top_logprobs_k: k }).warnings) {
    log(`warning: ${warning}`);
  }
  const model = new ToyLalm(opts.manifest);
  const prompts = readPrompts(opts.promptsPath);

  const records: RecordWire[] = [];
  const failed: string[] = [];
  for (const row of prompts) {
    // the hash is the engine's lookup key, so derive it from the prompt text
    // rather than trusting the sidecar
    const hash = promptHash(row.prompt);
    if (hash !== row.prompt_hash) {
      log(`warning: prompt_hash mismatch for ${row.prompt_hash.slice(0, 12)}, using computed hash`);
    }
    let gen;
    try {
      gen = model.generate(row.prompt, k);
    } catch (err) {
      failed.push(hash);
      log(`generation failed for ${hash.slice(0, 12)}: ${err}`);
      continue;
    }
    records.push(rawGenRecord(model.modelId, hash, gen.greedyText, gen.steps));
    const places = extractDigitPlaces(gen.steps);
    if (places) {
      records.push(digitDistRecord(places, gen.greedyText, model.modelId));
    }
  }
  writeJsonl(opts.outPath, records);
  return { prompts: prompts.length, records: records.length, failed };
}
