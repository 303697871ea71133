/**
 * Encoder abstraction. The bundle's dim is always read from the encoder's
 * declared output width, never configured separately.
 *
 * MockEncoder is a deterministic stand-in for environments without model
 * weights: features are unit vectors derived from a SHA-256 stream over
 * the input bytes, so identical inputs always produce identical features.
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

export interface Encoder {
  readonly id: string;
  readonly dim: number;
  encodeImage(path: string): Promise<Float32Array>;
  encodeText(text: string): Promise<Float32Array>;
}

function hashToUnitVector(seedBytes: Buffer, dim: number): Float32Array {
  const out = new Float32Array(dim);
  let counter = 0;
  let filled = 0;
  let normSq = 0;
  while (filled < dim) {
    const digest = createHash("sha256")
      .update(seedBytes)
      .update(Buffer.from([counter & 0xff, (counter >> 8) & 0xff]))
      .digest();
    for (let i = 0; i + 4 <= digest.length && filled < dim; i += 4) {
      // Map 32 random bits to (-1, 1); float32 rounding keeps determinism.
      const u = digest.readUInt32LE(i);
      const value = Math.fround((u / 2 ** 31) - 1.0);
      out[filled] = value;
      normSq += value * value;
      filled += 1;
    }
    counter += 1;
  }
  const norm = Math.sqrt(normSq);
  for (let i = 0; i < dim; i += 1) {
    out[i] = Math.fround((out[i] as number) / norm);
  }
  return out;
}

export class MockEncoder implements Encoder {
  readonly id: string;
  readonly dim: number;

  constructor(dim = 64) {
    if (dim < 2) {
      throw new Error("mock encoder dim must be >= 2");
    }
    this.id = `mock-${dim}`;
    this.dim = dim;
  }

  async encodeImage(path: string): Promise<Float32Array> {
    const bytes = readFileSync(path);
    return hashToUnitVector(Buffer.concat([Buffer.from("image:"), bytes]), this.dim);
  }

  async encodeText(text: string): Promise<Float32Array> {
    return hashToUnitVector(Buffer.from(`text:${text}`, "utf-8"), this.dim);
  }
}

/**
 * CLIP encoder backed by transformers.js. Loaded lazily: install
 * `@xenova/transformers` and pass a model id such as
 * `Xenova/clip-vit-base-patch32` (weights must be available locally or
 * downloadable). Image and text features are mean-pooled and normalized
 * by the pipeline itself.
 */
export class ClipEncoder implements Encoder {
  readonly id: string;
  dim = 0;
  private imagePipe: ((input: string, opts?: object) => Promise<{ data: Float32Array }>) | null = null;
  private textPipe: ((input: string, opts?: object) => Promise<{ data: Float32Array }>) | null = null;

  constructor(modelId: string) {
    this.id = modelId;
  }

  private async load(): Promise<void> {
    if (this.imagePipe && this.textPipe) return;
    // eslint-disable-next-line @typescript-eslint/no-explicit-any
    let transformers: any;
    try {
      // @ts-ignore -- optional runtime dependency, not installed by default
      transformers = await import("@xenova/transformers");
    } catch {
      throw new Error(
        "the clip encoder needs the optional dependency @xenova/transformers; " +
          "run `npm install @xenova/transformers` or use --encoder mock"
      );
    }
    this.imagePipe = await transformers.pipeline("image-feature-extraction", this.id);
    this.textPipe = await transformers.pipeline("feature-extraction", this.id);
  }

  async encodeImage(path: string): Promise<Float32Array> {
    await this.load();
    const out = await this.imagePipe!(path, { pooling: "mean", normalize: true });
    const vec = Float32Array.from(out.data);
    this.dim = this.dim || vec.length;
    return vec;
  }

  async encodeText(text: string): Promise<Float32Array> {
    await this.load();
    const out = await this.textPipe!(text, { pooling: "mean", normalize: true });
    const vec = Float32Array.from(out.data);
    this.dim = this.dim || vec.length;
    return vec;
  }
}

export function createEncoder(kind: string, options: { dim?: number; model?: string }): Encoder {
  if (kind === "mock") {
    return new MockEncoder(options.dim ?? 64);
  }
  if (kind === "clip") {
    return new ClipEncoder(options.model ?? "Xenova/clip-vit-base-patch32");
  }
  throw new Error(`unknown encoder ${JSON.stringify(kind)}; expected "mock" or "clip"`);
}
