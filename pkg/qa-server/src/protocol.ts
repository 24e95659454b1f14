// Request validation for the wire protocol. Responses are plain shapes, the
// invariants (score range, offsets indexing the answer) are enforced where
// the spans are produced and clamped once more in the route handlers.

import { z } from "zod";

export const qaRequestSchema = z.object({
  context: z.string().min(1, "context must be a non-empty string"),
  question: z.string().min(1, "question must be a non-empty string"),
});

export const encodeRequestSchema = z.object({
  text: z.string(),
});

export type QaRequest = z.infer<typeof qaRequestSchema>;
export type EncodeRequest = z.infer<typeof encodeRequestSchema>;

export function describeIssues(error: z.ZodError): string {
  return error.issues
    .map((issue) => (issue.path.length ? `${issue.path.join(".")}: ${issue.message}` : issue.message))
    .join("; ");
}
