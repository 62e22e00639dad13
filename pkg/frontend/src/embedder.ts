// Deterministic hashed n-gram sentence embedder.
//
// Features are word tokens plus padded character trigrams, signed-hashed
// (FNV-1a) into a fixed number of buckets and L2-normalized. No model
// download, no randomness: identical input always yields identical vectors,
// and lexically overlapping sentences land closer than unrelated ones.

export interface Embedder {
  readonly model: string;
  readonly dim: number;
  embed(text: string): number[];
}

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

function fnv1a(value: string): number {
  let hash = FNV_OFFSET;
  for (let i = 0; i < value.length; i++) {
    hash ^= value.charCodeAt(i);
    hash = Math.imul(hash, FNV_PRIME) >>> 0;
  }
  return hash >>> 0;
}

function tokenize(text: string): string[] {
  const normalized = text.normalize("NFKC").toLowerCase();
  const tokens = normalized.match(/[\p{L}\p{N}]+/gu);
  return tokens ?? [];
}

function* features(text: string): Generator<string> {
  for (const token of tokenize(text)) {
    yield `w:${token}`;
    const padded = `#${token}#`;
    for (let i = 0; i + 3 <= padded.length; i++) {
      yield `c:${padded.slice(i, i + 3)}`;
    }
  }
}

export function createHashEmbedder(model: string, dim: number): Embedder {
  if (!Number.isInteger(dim) || dim < 8) {
    throw new Error(`embedding dimension must be an integer >= 8, got ${dim}`);
  }
  return {
    model,
    dim,
    embed(text: string): number[] {
      const vector = new Array<number>(dim).fill(0);
      for (const feature of features(text)) {
        const hash = fnv1a(feature);
        const bucket = (hash >>> 1) % dim;
        const sign = (hash & 1) === 1 ? 1 : -1;
        vector[bucket] += sign;
      }
      let norm = 0;
      for (const v of vector) norm += v * v;
      norm = Math.sqrt(norm);
      if (norm > 0) {
        for (let i = 0; i < dim; i++) vector[i] /= norm;
      }
      return vector;
    },
  };
}

export const MODELS: Record<string, { dim: number }> = {
  "hash-ngram-v1": { dim: 256 },
  "hash-ngram-v1-small": { dim: 64 },
};

export function loadEmbedder(model: string, dim?: number): Embedder {
  const known = MODELS[model];
  if (!known && dim === undefined) {
    throw new Error(
      `unknown model ${model}; known: ${Object.keys(MODELS).join(", ")} (or pass --dim)`,
    );
  }
  return createHashEmbedder(model, dim ?? known.dim);
}

export function cosine(a: number[], b: number[]): number {
  let dot = 0;
  let na = 0;
  let nb = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const denom = Math.sqrt(na) * Math.sqrt(nb);
  return denom > 0 ? dot / denom : 0;
}
