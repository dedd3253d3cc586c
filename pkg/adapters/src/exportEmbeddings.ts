import { readFileSync } from "node:fs";
import { join } from "node:path";

import { readDataset } from "./dataset.js";
import type { AdapterManifest } from "./manifest.js";
import { embeddingRecord, writeJsonl, type EmbeddingWire } from "./records.js";
import { ToyClap } from "./toyClap.js";
import { decodeWav } from "./wav.js";
import { generateWindows, truncatedWindow } from "./windows.js";

export interface ExportEmbeddingsOptions {
  manifest: AdapterManifest;
  audioDir: string;
  datasetPath: string;
  outPath: string;
  hopS?: number;
  pooling?: "sliding" | "none";
  log?: (msg: string) => void;
}

export interface ExportSummary {
  records: number;
  clips: number;
  captions: number;
  skipped: string[];
}

/**
 * One embedding record per (clip, window) and per caption. Windows follow
 * the dataset's declared duration so the engine's file backend finds every
 * key it will ask for; clips whose files are missing or undecodable are
 * listed and skipped, the run continues.
 */
export function exportEmbeddings(opts: ExportEmbeddingsOptions): ExportSummary {
  const log = opts.log ?? ((m) => console.error(m));
  const windowLen = opts.manifest.window_len_s;
  if (!windowLen) throw new Error("manifest has no window_len_s");
  const hop = opts.hopS ?? 1.0;
  const model = new ToyClap(opts.manifest);
  const { audio, captions } = readDataset(opts.datasetPath);

  const records: EmbeddingWire[] = [];
  const skipped: string[] = [];
  let clips = 0;
  for (const [audioId, durationS] of audio) {
    let decoded;
    try {
      decoded = decodeWav(readFileSync(join(opts.audioDir, `${audioId}.wav`)));
    } catch (err) {
      skipped.push(audioId);
      log(`skipping ${audioId}: ${err instanceof Error ? err.message : err}`);
      continue;
    }
    clips++;
    const windows =
      opts.pooling === "none"
        ? [truncatedWindow(durationS, windowLen)]
        : generateWindows(durationS, windowLen, hop);
    for (const w of windows) {
      records.push(
        embeddingRecord(
          { audio_id: audioId, window: w },
          model.modelId,
          model.embedWindow(decoded.samples, decoded.sampleRate, w)
        )
      );
    }
  }
  for (const [captionId, text] of captions) {
    records.push(
      embeddingRecord({ caption_id: captionId, text }, model.modelId, model.embedText(text))
    );
  }
  writeJsonl(opts.outPath, records);
  return { records: records.length, clips, captions: captions.size, skipped };
}
