import { readFileSync } from "node:fs";

export interface DatasetIndex {
  // insertion order preserved so exports are deterministic
  audio: Map<string, number>; // id -> duration_s
  captions: Map<string, string>; // id -> text
}

interface ClipRow {
  id: string;
  duration_s: number;
}

interface CaptionRow {
  id: string;
  text: string;
}

/** Collect every clip and caption referenced by a preference/rating dataset. */
export function readDataset(path: string): DatasetIndex {
  const audio = new Map<string, number>();
  const captions = new Map<string, string>();
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, i) => {
    if (!line.trim()) return;
    let row: any;
    try {
      row = JSON.parse(line);
    } catch (err) {
      throw new Error(`${path}:${i + 1}: not JSON: ${err}`);
    }
    const take = (clip: ClipRow | undefined, caps: Array<CaptionRow | undefined>) => {
      if (!clip?.id || typeof clip.duration_s !== "number") {
        throw new Error(`${path}:${i + 1}: item is missing audio id/duration`);
      }
      audio.set(clip.id, clip.duration_s);
      for (const c of caps) {
        if (!c?.id || typeof c.text !== "string") {
          throw new Error(`${path}:${i + 1}: caption is missing id/text`);
        }
        captions.set(c.id, c.text);
      }
    };
    if (row.kind === "pref_item") {
      take(row.audio, [row.caption_a, row.caption_b]);
    } else if (row.kind === "rating_item") {
      take(row.audio, [row.caption]);
    } else {
      throw new Error(`${path}:${i + 1}: expected pref_item or rating_item, got ${row.kind}`);
    }
  });
  if (audio.size === 0) throw new Error(`${path}: no items`);
  return { audio, captions };
}

export interface PromptRow {
  prompt_hash: string;
  template_version: string;
  prompt: string;
}

/** Read the engine's export-prompts sidecar. */
export function readPrompts(path: string): PromptRow[] {
  const rows: PromptRow[] = [];
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, i) => {
    if (!line.trim()) return;
    const row = JSON.parse(line);
    if (typeof row.prompt !== "string" || typeof row.prompt_hash !== "string") {
      throw new Error(`${path}:${i + 1}: not a prompt row`);
    }
    rows.push(row);
  });
  if (rows.length === 0) throw new Error(`${path}: no prompts`);
  return rows;
}
