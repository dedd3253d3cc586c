import { parseArgs } from "node:util";

import { manifestForModel } from "../cliCommon.js";
import { startServer } from "../serve.js";

export async function run(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      "model-id": { type: "string" },
      "audio-dir": { type: "string" },
      port: { type: "string", default: "8081" },
      checkpoints: { type: "string" },
    },
  });
  const manifest = manifestForModel(values["model-id"], values.checkpoints);
  const { port } = await startServer(
    { manifest, audioDir: values["audio-dir"], log: (m) => console.error(m) },
    Number(values.port)
  );
  console.log(`serving ${manifest.model_id} on http://127.0.0.1:${port}`);
  return 0;
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(process.argv[1].replace(/\\/g, "/"));
if (invokedDirectly) {
  run(process.argv.slice(2)).catch((err) => {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(1);
  });
}
