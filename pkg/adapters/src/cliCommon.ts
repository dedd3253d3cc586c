import { fileURLToPath } from "node:url";
import { dirname, resolve } from "node:path";

import { resolveManifest, type AdapterManifest } from "./manifest.js";

/** checkpoints/ shipped with the package, overridable via env or flag. */
export function defaultCheckpointsDir(): string {
  const env = process.env.CAF_ADAPTER_CHECKPOINTS;
  if (env) return env;
  // this module sits one level below the package root in both src/ and dist/
  const here = dirname(fileURLToPath(import.meta.url));
  return resolve(here, "..", "checkpoints");
}

export function manifestForModel(modelId: string | undefined, checkpointsDir?: string): AdapterManifest {
  if (!modelId) throw new Error("--model-id is required");
  return resolveManifest(modelId, checkpointsDir || defaultCheckpointsDir());
}

export function requireFlag(value: string | undefined, flag: string): string {
  if (!value) throw new Error(`${flag} is required`);
  return value;
}
