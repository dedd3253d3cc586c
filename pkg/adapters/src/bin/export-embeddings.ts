import { parseArgs } from "node:util";

import { manifestForModel, requireFlag } from "../cliCommon.js";
import { exportEmbeddings } from "../exportEmbeddings.js";

export async function run(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      "model-id": { type: "string" },
      "audio-dir": { type: "string" },
      dataset: { type: "string" },
      out: { type: "string" },
      hop: { type: "string", default: "1.0" },
      pooling: { type: "string", default: "sliding" },
      checkpoints: { type: "string" },
    },
  });
  if (values.pooling !== "sliding" && values.pooling !== "none") {
    throw new Error(`--pooling must be sliding or none, got ${values.pooling}`);
  }
  const summary = exportEmbeddings({
    manifest: manifestForModel(values["model-id"], values.checkpoints),
    audioDir: requireFlag(values["audio-dir"], "--audio-dir"),
    datasetPath: requireFlag(values.dataset, "--dataset"),
    outPath: requireFlag(values.out, "--out"),
    hopS: Number(values.hop),
    pooling: values.pooling,
  });
  console.log(
    `wrote ${summary.records} records (${summary.clips} clips, ${summary.captions} captions)` +
      (summary.skipped.length ? `; skipped: ${summary.skipped.join(", ")}` : "")
  );
  return 0;
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(process.argv[1].replace(/\\/g, "/"));
if (invokedDirectly) {
  run(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (err) => {
      console.error(String(err instanceof Error ? err.message : err));
      process.exit(1);
    }
  );
}
