// Deterministic lexical span extractor serving the /qa endpoint.
//
// The client probes one column at a time: "how many <column>" for numeric
// columns, "which are <column>" for the rest, with the user's question as
// the context. Numeric probes return the number nearest a column keyword,
// pulling an adjacent comparison phrase ("below age 40", "between age 30
// and 60") into the span so the condition parser sees the operator. Entity
// probes return the value word from an embedded lexicon when one is known
// for the column, else the non-stopword token run nearest a keyword.

import { COMPARISON_PHRASE_RE, STOPWORDS, tokenize, wordSpans } from "./text.js";

export interface Span {
  answer: string;
  score: number;
  start: number;
  end: number;
}

export const MISS: Span = { answer: "", score: 0, start: 0, end: 0 };

const NUMERIC_PREFIX = "how many ";
const ENTITY_PREFIX = "which are ";

// Four-digit numbers in this range count as a year mention even when the
// word "year" is absent ("... in 2012?"), mirroring the client's year
// validation range.
const YEAR_RANGE: readonly [number, number] = [1000, 2999];
const YEAR_FALLBACK_SCORE = 0.5;

// Values recognizable without any column keyword nearby, keyed by the probe
// target. Gender words cover the bundled synonym table on the client side.
const VALUE_LEXICONS: Record<string, readonly string[]> = {
  gender: [
    "male", "males", "man", "men", "boy", "boys", "gentleman", "gentlemen",
    "female", "females", "woman", "women", "girl", "girls", "lady", "ladies",
  ],
};

function isNumberWord(word: string): boolean {
  return /^\d+$/.test(word);
}

function proximityScore(distance: number): number {
  return Math.round(10000 / (1 + Math.max(0, distance - 1))) / 10000;
}

export class LexicalQaModel {
  readonly id: string = "lexical-v1";

  extract(context: string, question: string): Span {
    const probe = question.toLowerCase().trim();
    if (probe.startsWith(NUMERIC_PREFIX)) {
      return this.numeric(context, probe.slice(NUMERIC_PREFIX.length));
    }
    if (probe.startsWith(ENTITY_PREFIX)) {
      return this.entity(context, probe.slice(ENTITY_PREFIX.length));
    }
    return MISS;
  }

  private numeric(context: string, target: string): Span {
    const keywords = tokenize(target);
    if (keywords.size === 0) {
      return MISS;
    }
    const lowered = context.toLowerCase();
    const words = wordSpans(lowered);
    const keywordIdx = words.flatMap((w, i) => (keywords.has(w.word) ? [i] : []));
    const numbers = words.flatMap((w, i) => (isNumberWord(w.word) ? [i] : []));
    if (keywordIdx.length === 0) {
      return keywords.has("year") ? this.yearShaped(context, words, numbers) : MISS;
    }
    if (numbers.length === 0) {
      return MISS;
    }
    const distanceTo = (i: number) => Math.min(...keywordIdx.map((k) => Math.abs(i - k)));
    let best = numbers[0];
    for (const i of numbers.slice(1)) {
      if (distanceTo(i) < distanceTo(best)) {
        best = i;
      }
    }
    let { start, end } = words[best];

    // Fold in a comparison phrase sitting at most two words before the
    // number; a leading "between" also swallows the "and <number>" tail.
    for (const match of lowered.matchAll(COMPARISON_PHRASE_RE)) {
      const phraseStart = match.index!;
      const phraseEnd = phraseStart + match[0].length;
      if (phraseEnd > start) {
        continue;
      }
      const gap = wordSpans(lowered.slice(phraseEnd, start));
      if (gap.length > 2) {
        continue;
      }
      start = phraseStart;
      if (match[1] === "between") {
        const tail = /^\s+and\s+[-−]?\d+(?:\.\d+)?/.exec(lowered.slice(end));
        if (tail) {
          end += tail[0].length;
        }
      }
    }
    return {
      answer: context.slice(start, end),
      score: proximityScore(distanceTo(best)),
      start,
      end,
    };
  }

  // No keyword hit: a lone year-shaped number still binds the year column.
  private yearShaped(context: string, words: ReturnType<typeof wordSpans>, numbers: number[]): Span {
    for (const i of numbers) {
      const { word, start, end } = words[i];
      const value = parseInt(word, 10);
      if (word.length === 4 && value >= YEAR_RANGE[0] && value <= YEAR_RANGE[1]) {
        return { answer: context.slice(start, end), score: YEAR_FALLBACK_SCORE, start, end };
      }
    }
    return MISS;
  }

  private entity(context: string, target: string): Span {
    const lexicon = VALUE_LEXICONS[target.trim()];
    const lowered = context.toLowerCase();
    const words = wordSpans(lowered);
    if (lexicon) {
      for (const { word, start, end } of words) {
        if (lexicon.includes(word)) {
          return { answer: context.slice(start, end), score: 1, start, end };
        }
      }
      return MISS;
    }
    const keywords = tokenize(target);
    if (keywords.size === 0) {
      return MISS;
    }
    const keywordIdx = words.flatMap((w, i) => (keywords.has(w.word) ? [i] : []));
    if (keywordIdx.length === 0) {
      return MISS;
    }
    const candidates = new Set(
      words.flatMap((w, i) =>
        !STOPWORDS.has(w.word) && !keywords.has(w.word) && !isNumberWord(w.word) ? [i] : [],
      ),
    );
    if (candidates.size === 0) {
      return MISS;
    }
    const distanceTo = (i: number) => Math.min(...keywordIdx.map((k) => Math.abs(i - k)));
    let anchor = -1;
    for (const i of candidates) {
      if (anchor === -1 || distanceTo(i) < distanceTo(anchor) || (distanceTo(i) === distanceTo(anchor) && i < anchor)) {
        anchor = i;
      }
    }
    // Expand across the contiguous run of candidate words, three words max.
    let lo = anchor;
    let hi = anchor;
    while (candidates.has(lo - 1) && hi - lo < 2) {
      lo -= 1;
    }
    while (candidates.has(hi + 1) && hi - lo < 2) {
      hi += 1;
    }
    const start = words[lo].start;
    const end = words[hi].end;
    return {
      answer: context.slice(start, end),
      score: proximityScore(distanceTo(anchor)),
      start,
      end,
    };
  }
}
