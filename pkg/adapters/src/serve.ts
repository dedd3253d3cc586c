import { readFileSync } from "node:fs";
import { createServer, type IncomingMessage, type Server, type ServerResponse } from "node:http";
import { join } from "node:path";

import type { AdapterManifest } from "./manifest.js";
import { embeddingRecord, promptHash, rawGenRecord, type SubjectWire } from "./records.js";
import { ToyClap } from "./toyClap.js";
import { ToyLalm } from "./toyLalm.js";
import { decodeWav, type DecodedWav } from "./wav.js";

// Serves one checkpoint over the engine's backend protocol:
//   POST /v1/embed     {model_id, subject}            -> embedding record
//   POST /v1/generate  {model_id, prompt, ...}        -> raw_gen record
//   GET  /v1/health                                   -> {status, model_id}
// Malformed requests get 4xx, model faults 5xx. Generation temperature is
// pinned to 0 no matter what the request says.

export interface ServeOptions {
  manifest: AdapterManifest;
  audioDir?: string;
  log?: (msg: string) => void;
}

class HttpError extends Error {
  constructor(
    readonly status: number,
    message: string
  ) {
    super(message);
  }
}

function readBody(req: IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

export function buildServer(opts: ServeOptions): Server {
  const manifest = opts.manifest;
  const log = opts.log ?? (() => {});
  const clap = manifest.family === "clap" ? new ToyClap(manifest) : null;
  const lalm = manifest.family === "lalm" ? new ToyLalm(manifest) : null;
  const wavCache = new Map<string, DecodedWav>();

  const loadClip = (audioId: string): DecodedWav => {
    const hit = wavCache.get(audioId);
    if (hit) return hit;
    if (!opts.audioDir) throw new HttpError(400, "server has no audio directory configured");
    if (!/^[\w.-]+$/.test(audioId)) throw new HttpError(400, `bad audio id ${JSON.stringify(audioId)}`);
    let decoded: DecodedWav;
    try {
      decoded = decodeWav(readFileSync(join(opts.audioDir, `${audioId}.wav`)));
    } catch (err) {
      throw new HttpError(400, `cannot decode clip ${audioId}: ${err instanceof Error ? err.message : err}`);
    }
    wavCache.set(audioId, decoded);
    return decoded;
  };

  const embed = (body: any) => {
    if (!clap) throw new HttpError(400, `${manifest.model_id} does not embed`);
    const subject = body?.subject as SubjectWire | undefined;
    if (!subject || typeof subject !== "object") throw new HttpError(400, "missing subject");
    if ("audio_id" in subject) {
      const w = subject.window;
      if (!w || typeof w.start_s !== "number" || typeof w.len_s !== "number") {
        throw new HttpError(400, "audio subject needs window.start_s and window.len_s");
      }
      const clip = loadClip(subject.audio_id);
      const vector = clap.embedWindow(clip.samples, clip.sampleRate, w);
      return embeddingRecord({ audio_id: subject.audio_id, window: w }, clap.modelId, vector);
    }
    if ("caption_id" in subject) {
      if (typeof subject.text !== "string" || !subject.text) {
        throw new HttpError(400, "caption subject needs text");
      }
      return embeddingRecord(
        { caption_id: subject.caption_id, text: subject.text },
        clap.modelId,
        clap.embedText(subject.text)
      );
    }
    throw new HttpError(400, "subject is neither an audio window nor a caption");
  };

  const generate = (body: any) => {
    if (!lalm) throw new HttpError(400, `${manifest.model_id} does not generate`);
    if (typeof body?.prompt !== "string" || !body.prompt) throw new HttpError(400, "missing prompt");
    const k = typeof body.top_logprobs === "number" ? body.top_logprobs : undefined;
    const gen = lalm.generate(body.prompt, k);
    // echo the request's hash when present, else derive it
    const hash = typeof body.prompt_hash === "string" && body.prompt_hash
      ? body.prompt_hash
      : promptHash(body.prompt);
    return rawGenRecord(lalm.modelId, hash, gen.greedyText, gen.steps);
  };

  return createServer(async (req: IncomingMessage, res: ServerResponse) => {
    const reply = (status: number, payload: unknown) => {
      const data = JSON.stringify(payload);
      res.writeHead(status, { "content-type": "application/json" });
      res.end(data);
    };
    try {
      if (req.method === "GET" && req.url === "/v1/health") {
        reply(200, { status: "ok", model_id: manifest.model_id });
        return;
      }
      if (req.method !== "POST" || (req.url !== "/v1/embed" && req.url !== "/v1/generate")) {
        throw new HttpError(404, `no such route: ${req.method} ${req.url}`);
      }
      let body: any;
      try {
        body = JSON.parse(await readBody(req));
      } catch {
        throw new HttpError(400, "body is not JSON");
      }
      if (body?.model_id !== undefined && body.model_id !== manifest.model_id) {
        throw new HttpError(400, `this server hosts ${manifest.model_id}, not ${body.model_id}`);
      }
      reply(200, req.url === "/v1/embed" ? embed(body) : generate(body));
    } catch (err) {
      if (err instanceof HttpError) {
        log(`${err.status} ${req.method} ${req.url}: ${err.message}`);
        reply(err.status, { error: err.message });
      } else {
        log(`500 ${req.method} ${req.url}: ${err}`);
        reply(500, { error: `model fault: ${err instanceof Error ? err.message : err}` });
      }
    }
  });
}

/** Start listening; resolves with the bound port (pass 0 for ephemeral). */
export function startServer(opts: ServeOptions, port: number, host = "127.0.0.1"): Promise<{ server: Server; port: number }> {
  const server = buildServer(opts);
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const addr = server.address();
      if (addr === null || typeof addr === "string") {
        reject(new Error("unexpected server address"));
        return;
      }
      resolve({ server, port: addr.port });
    });
  });
}
