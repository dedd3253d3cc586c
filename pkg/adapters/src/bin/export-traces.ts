import { parseArgs } from "node:util";

import { manifestForModel, requireFlag } from "../cliCommon.js";
import { exportTraces } from "../exportTraces.js";

export async function run(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      "model-id": { type: "string" },
      prompts: { type: "string" },
      out: { type: "string" },
      "top-logprobs": { type: "string" },
      checkpoints: { type: "string" },
    },
  });
  const summary = exportTraces({
    manifest: manifestForModel(values["model-id"], values.checkpoints),
    promptsPath: requireFlag(values.prompts, "--prompts"),
    outPath: requireFlag(values.out, "--out"),
    topLogprobsK: values["top-logprobs"] ? Number(values["top-logprobs"]) : undefined,
  });
  console.log(
    `wrote ${summary.records} records for ${summary.prompts} prompts` +
      (summary.failed.length ? `; failed: ${summary.failed.length}` : "")
  );
  return summary.failed.length ? 1 : 0;
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
