// Model and encoder registries behind the --model and --encoder flags.
// Swapping engines never requires a client-side change; unknown ids fail
// loudly at startup.

import { HashingBowEncoder } from "./encoder.js";
import { LexicalQaModel, type Span } from "./extractive.js";

export interface QaModel {
  readonly id: string;
  extract(context: string, question: string): Span;
}

export interface Encoder {
  readonly id: string;
  readonly dim: number;
  encode(text: string): number[];
}

export class EngineError extends Error {}

const QA_MODELS: Record<string, () => QaModel> = {
  "lexical-v1": () => new LexicalQaModel(),
};

export const DEFAULT_QA_MODEL = "lexical-v1";
export const DEFAULT_ENCODER = "hashing-bow-512";

export function loadQaModel(id: string): QaModel {
  const make = QA_MODELS[id];
  if (!make) {
    const known = Object.keys(QA_MODELS).join(", ");
    throw new EngineError(`unknown QA model "${id}" (available: ${known})`);
  }
  return make();
}

export function loadEncoder(id: string): Encoder {
  const match = /^hashing-bow(?:-(\d+))?$/.exec(id);
  if (!match) {
    throw new EngineError(`unknown encoder "${id}" (expected hashing-bow or hashing-bow-<dim>)`);
  }
  const dim = match[1] === undefined ? undefined : parseInt(match[1], 10);
  try {
    return new HashingBowEncoder(dim, id);
  } catch (err) {
    throw new EngineError(err instanceof Error ? err.message : String(err));
  }
}
