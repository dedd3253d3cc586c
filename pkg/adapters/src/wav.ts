// Minimal RIFF/WAVE reader: PCM 16/32-bit and IEEE float32, any channel
// count (mixed down to mono). Enough for fixture clips and local corpora;
// anything fancier should be converted before export.

export interface DecodedWav {
  samples: Float32Array; // mono
  sampleRate: number;
  durationS: number;
}

export function decodeWav(buf: Buffer): DecodedWav {
  if (buf.length < 44 || buf.toString("ascii", 0, 4) !== "RIFF" || buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error("not a RIFF/WAVE file");
  }
  let fmt: { format: number; channels: number; sampleRate: number; bits: number } | null = null;
  let data: Buffer | null = null;
  let off = 12;
  while (off + 8 <= buf.length) {
    const id = buf.toString("ascii", off, off + 4);
    const size = buf.readUInt32LE(off + 4);
    const body = buf.subarray(off + 8, off + 8 + size);
    if (id === "fmt ") {
      fmt = {
        format: body.readUInt16LE(0),
        channels: body.readUInt16LE(2),
        sampleRate: body.readUInt32LE(4),
        bits: body.readUInt16LE(14),
      };
    } else if (id === "data") {
      data = body;
    }
    off += 8 + size + (size % 2); // chunks are word-aligned
  }
  if (!fmt) throw new Error("missing fmt chunk");
  if (!data) throw new Error("missing data chunk");
  if (fmt.channels < 1) throw new Error("zero channels");

  const { format, channels, sampleRate, bits } = fmt;
  let read: (frame: number, ch: number) => number;
  let bytesPer: number;
  if (format === 1 && bits === 16) {
    bytesPer = 2;
    read = (f, c) => data!.readInt16LE((f * channels + c) * 2) / 32768;
  } else if (format === 1 && bits === 32) {
    bytesPer = 4;
    read = (f, c) => data!.readInt32LE((f * channels + c) * 4) / 2147483648;
  } else if (format === 3 && bits === 32) {
    bytesPer = 4;
    read = (f, c) => data!.readFloatLE((f * channels + c) * 4);
  } else {
    throw new Error(`unsupported wav encoding: format=${format} bits=${bits}`);
  }

  const frames = Math.floor(data.length / (bytesPer * channels));
  const mono = new Float32Array(frames);
  for (let f = 0; f < frames; f++) {
    let acc = 0;
    for (let c = 0; c < channels; c++) acc += read(f, c);
    mono[f] = acc / channels;
  }
  return { samples: mono, sampleRate, durationS: frames / sampleRate };
}

/** PCM16 mono encoder, used by tests and fixture generators. */
export function encodeWavPcm16(samples: Float32Array, sampleRate: number): Buffer {
  const dataSize = samples.length * 2;
  const buf = Buffer.alloc(44 + dataSize);
  buf.write("RIFF", 0, "ascii");
  buf.writeUInt32LE(36 + dataSize, 4);
  buf.write("WAVE", 8, "ascii");
  buf.write("fmt ", 12, "ascii");
  buf.writeUInt32LE(16, 16);
  buf.writeUInt16LE(1, 20); // PCM
  buf.writeUInt16LE(1, 22); // mono
  buf.writeUInt32LE(sampleRate, 24);
  buf.writeUInt32LE(sampleRate * 2, 28);
  buf.writeUInt16LE(2, 32);
  buf.writeUInt16LE(16, 34);
  buf.write("data", 36, "ascii");
  buf.writeUInt32LE(dataSize, 40);
  for (let i = 0; i < samples.length; i++) {
    const v = Math.max(-1, Math.min(1, samples[i]));
    buf.writeInt16LE(Math.round(v * 32767), 44 + i * 2);
  }
  return buf;
}
