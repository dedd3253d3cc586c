import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

export type ModelFamily = "clap" | "lalm";

export interface AdapterManifest {
  model_id: string;
  family: ModelFamily;
  checkpoint_ref: string;
  window_len_s?: number;
  top_logprobs_k?: number;
  notes?: string;
  // checkpoint parameters live alongside the manifest fields
  dim?: number;
  seed?: number;
  sample_rate?: number;
}

const SHORT_WINDOW_MARKERS = ["ms-clap", "ms_clap", "msclap"];

export function expectedWindowLen(modelId: string): number {
  const lower = modelId.toLowerCase();
  return SHORT_WINDOW_MARKERS.some((m) => lower.includes(m)) ? 7.0 : 10.0;
}

export interface ManifestCheck {
  errors: string[];
  warnings: string[];
}

export function checkManifest(m: AdapterManifest): ManifestCheck {
  const errors: string[] = [];
  const warnings: string[] = [];
  if (!m.model_id) errors.push("model_id is required");
  if (m.family !== "clap" && m.family !== "lalm") {
    errors.push(`family must be "clap" or "lalm", got ${JSON.stringify(m.family)}`);
  }
  if (!m.checkpoint_ref) errors.push("checkpoint_ref is required");
  if (m.family === "clap") {
    if (typeof m.window_len_s !== "number" || m.window_len_s <= 0) {
      errors.push("clap manifests need window_len_s > 0");
    } else if (m.window_len_s !== expectedWindowLen(m.model_id)) {
      errors.push(
        `window_len_s ${m.window_len_s} disagrees with the engine default ` +
          `${expectedWindowLen(m.model_id)} for ${JSON.stringify(m.model_id)}`
      );
    }
    if (typeof m.dim !== "number" || m.dim < 2) errors.push("clap manifests need dim >= 2");
  }
  if (m.family === "lalm") {
    const k = m.top_logprobs_k;
    if (typeof k !== "number" || k < 1) {
      errors.push("lalm manifests need top_logprobs_k >= 1");
    } else if (k < 10) {
      warnings.push(
        `top_logprobs_k=${k} cannot cover all ten digits; emitted distributions will be truncated`
      );
    }
  }
  if (typeof m.seed !== "number") errors.push("toy checkpoints need a numeric seed");
  return { errors, warnings };
}

export function loadManifest(path: string): AdapterManifest {
  const m = JSON.parse(readFileSync(path, "utf-8")) as AdapterManifest;
  const { errors } = checkManifest(m);
  if (errors.length) {
    throw new Error(`invalid manifest ${path}: ${errors.join("; ")}`);
  }
  return m;
}

/** Find a manifest by model id in a checkpoints directory. */
export function resolveManifest(modelId: string, checkpointsDir: string): AdapterManifest {
  const candidates: string[] = [];
  for (const name of readdirSync(checkpointsDir)) {
    if (!name.endsWith(".json")) continue;
    const path = join(checkpointsDir, name);
    let parsed: AdapterManifest;
    try {
      parsed = JSON.parse(readFileSync(path, "utf-8"));
    } catch {
      continue;
    }
    candidates.push(parsed.model_id);
    if (parsed.model_id === modelId) return loadManifest(path);
  }
  throw new Error(
    `no manifest for ${JSON.stringify(modelId)} in ${checkpointsDir} ` +
      `(found: ${candidates.join(", ") || "none"})`
  );
}
