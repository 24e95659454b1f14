// Feature-hashing sentence encoder serving the /encode endpoint.
//
// Same scheme as the client's built-in bag-of-words encoder: unigrams and
// bigrams are md5-hashed into a fixed-width histogram, then l2-normalized.
// Stopwords are kept on purpose, the aggregate cues ("how many", "number
// of") live in exactly those words. Purely functional, so encoding the same
// text twice always yields the same vector.

import { createHash } from "node:crypto";

const FEATURE_RE = /[\p{L}\p{N}]+/gu;

export const DEFAULT_ENCODER_DIM = 512;

export class HashingBowEncoder {
  readonly id: string;
  readonly dim: number;

  constructor(dim: number = DEFAULT_ENCODER_DIM, id?: string) {
    if (!Number.isInteger(dim) || dim <= 0) {
      throw new Error(`encoder dim must be a positive integer, got ${dim}`);
    }
    this.dim = dim;
    this.id = id ?? `hashing-bow-${dim}`;
  }

  private *features(text: string): Generator<string> {
    const words = [...text.matchAll(FEATURE_RE)].map((m) => m[0].toLowerCase());
    yield* words;
    for (let i = 0; i + 1 < words.length; i += 1) {
      yield `${words[i]} ${words[i + 1]}`;
    }
  }

  encode(text: string): number[] {
    const counts = new Float64Array(this.dim);
    for (const feature of this.features(text)) {
      const digest = createHash("md5").update(feature, "utf8").digest();
      counts[Number(digest.readBigUInt64LE(0) % BigInt(this.dim))] += 1;
    }
    let sumSquares = 0;
    for (const value of counts) {
      sumSquares += value * value;
    }
    const norm = Math.sqrt(sumSquares);
    return Array.from(counts, (value) => (norm > 0 ? value / norm : 0));
  }
}
