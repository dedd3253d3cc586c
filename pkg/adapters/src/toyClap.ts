import type { AdapterManifest } from "./manifest.js";
import type { Window } from "./windows.js";

// A deterministic stand-in for a contrastive audio/text checkpoint: fixed
// hand-rolled features projected through a seeded random matrix. No claim to
// perceptual quality; the point is exercising the full export/serve plumbing
// with stable, nontrivial vectors.

const FEATURE_DIM = 16;

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function projectionMatrix(seed: number, dim: number): Float64Array {
  const rand = mulberry32(seed);
  const mat = new Float64Array(dim * FEATURE_DIM);
  for (let i = 0; i < mat.length; i++) {
    mat[i] = rand() * 2 - 1;
  }
  return mat;
}

function project(mat: Float64Array, dim: number, feats: Float64Array): number[] {
  const out: number[] = new Array(dim);
  for (let r = 0; r < dim; r++) {
    let acc = 0;
    for (let c = 0; c < FEATURE_DIM; c++) {
      acc += mat[r * FEATURE_DIM + c] * feats[c];
    }
    out[r] = acc;
  }
  return out;
}

function audioFeatures(slice: Float32Array): Float64Array {
  const f = new Float64Array(FEATURE_DIM);
  const n = slice.length;
  if (n === 0) {
    f[15] = 1; // silent/empty marker keeps the vector nonzero
    return f;
  }
  // eight banded RMS values over contiguous segments
  for (let b = 0; b < 8; b++) {
    const a = Math.floor((b * n) / 8);
    const z = Math.floor(((b + 1) * n) / 8);
    let acc = 0;
    for (let i = a; i < z; i++) acc += slice[i] * slice[i];
    f[b] = Math.sqrt(acc / Math.max(1, z - a));
  }
  let zc = 0;
  let mean = 0;
  let meanAbs = 0;
  let peak = 0;
  for (let i = 0; i < n; i++) {
    const v = slice[i];
    mean += v;
    meanAbs += Math.abs(v);
    if (Math.abs(v) > peak) peak = Math.abs(v);
    if (i > 0 && v * slice[i - 1] < 0) zc++;
  }
  f[8] = zc / n;
  f[9] = mean / n;
  f[10] = meanAbs / n;
  f[11] = peak;
  // coarse autocorrelation at three lags
  for (const [idx, lag] of [
    [12, 1],
    [13, 2],
    [14, 4],
  ] as const) {
    let acc = 0;
    for (let i = lag; i < n; i++) acc += slice[i] * slice[i - lag];
    f[idx] = acc / Math.max(1, n - lag);
  }
  f[15] = 1; // bias term
  return f;
}

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

function textFeatures(text: string): Float64Array {
  const f = new Float64Array(FEATURE_DIM);
  const norm = text.toLowerCase();
  for (let i = 0; i + 3 <= norm.length; i++) {
    f[fnv1a(norm.slice(i, i + 3)) % (FEATURE_DIM - 1)] += 1;
  }
  let ss = 0;
  for (let i = 0; i < FEATURE_DIM - 1; i++) ss += f[i] * f[i];
  const scale = ss > 0 ? 1 / Math.sqrt(ss) : 1;
  for (let i = 0; i < FEATURE_DIM - 1; i++) f[i] *= scale;
  f[15] = 1;
  return f;
}

export class ToyClap {
  readonly modelId: string;
  readonly dim: number;
  private readonly mat: Float64Array;

  constructor(manifest: AdapterManifest) {
    if (manifest.family !== "clap") {
      throw new Error(`manifest ${manifest.model_id} is not a clap checkpoint`);
    }
    this.modelId = manifest.model_id;
    this.dim = manifest.dim ?? 24;
    this.mat = projectionMatrix(manifest.seed ?? 0, this.dim);
  }

  embedWindow(samples: Float32Array, sampleRate: number, window: Window): number[] {
    const begin = Math.min(samples.length, Math.max(0, Math.floor(window.start_s * sampleRate)));
    const end = Math.min(
      samples.length,
      Math.max(begin, Math.floor((window.start_s + window.len_s) * sampleRate))
    );
    return project(this.mat, this.dim, audioFeatures(samples.subarray(begin, end)));
  }

  embedText(text: string): number[] {
    return project(this.mat, this.dim, textFeatures(text));
  }
}
