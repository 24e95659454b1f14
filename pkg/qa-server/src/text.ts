// Word scanning and comparison-phrase detection shared by the QA model and
// the encoder. Matches the client pipeline's tokenizer: words are runs of
// letters or digits (underscores split), lowercased, with English stopwords
// dropped where noted.

export interface WordSpan {
  word: string;
  start: number;
  end: number;
}

const WORD_RE = /[\p{L}\p{N}]+/gu;

export const STOPWORDS: ReadonlySet<string> = new Set([
  "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your",
  "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she",
  "her", "hers", "herself", "it", "its", "itself", "they", "them", "their",
  "theirs", "themselves", "what", "which", "who", "whom", "this", "that",
  "these", "those", "am", "is", "are", "was", "were", "be", "been", "being",
  "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
  "the", "and", "but", "if", "or", "because", "as", "until", "while", "of",
  "at", "by", "for", "with", "about", "against", "between", "into", "through",
  "during", "before", "after", "above", "below", "to", "from", "up", "down",
  "in", "out", "on", "off", "over", "under", "again", "further", "then",
  "once", "here", "there", "when", "where", "why", "how", "all", "any",
  "both", "each", "few", "more", "most", "other", "some", "such", "no",
  "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s",
  "t", "can", "will", "just", "don", "should", "now",
]);

export function wordSpans(text: string): WordSpan[] {
  const spans: WordSpan[] = [];
  for (const match of text.matchAll(WORD_RE)) {
    const start = match.index!;
    spans.push({ word: match[0], start, end: start + match[0].length });
  }
  return spans;
}

export function tokenize(text: string): Set<string> {
  const tokens = new Set<string>();
  for (const match of text.toLowerCase().matchAll(WORD_RE)) {
    if (!STOPWORDS.has(match[0])) {
      tokens.add(match[0]);
    }
  }
  return tokens;
}

// Comparison phrases recognized around extracted numbers, longest first so
// "less than" wins over a bare "than". The downstream condition parser keys
// off the exact same phrase set.
const COMPARISON_PHRASES = [
  "greater than", "fewer than", "less than", "more than",
  "between", "above", "below", "under", "over",
];

export const COMPARISON_PHRASE_RE = new RegExp(
  "\\b(" + COMPARISON_PHRASES.join("|") + ")\\b",
  "gi",
);
