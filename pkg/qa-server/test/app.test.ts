import type { Server } from "node:http";
import type { AddressInfo } from "node:net";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { createApp } from "../src/app.js";
import { loadEncoder, loadQaModel, type QaModel } from "../src/engines.js";

const QUESTIONS = [
  "Give me the death count in 2012?",
  "Give me death count of people below age 40 who had stomach cancer?",
  "Give me death count between age 30 and 60 due to pancreas cancer?",
];

const PROBES = [
  "how many sno",
  "how many year",
  "which are nationality",
  "which are gender",
  "which are cancer site",
  "how many death count",
  "how many age",
];

function listen(server: Server): string {
  const { port } = server.address() as AddressInfo;
  return `http://127.0.0.1:${port}`;
}

async function post(base: string, path: string, body: unknown): Promise<Response> {
  return fetch(base + path, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: typeof body === "string" ? body : JSON.stringify(body),
  });
}

describe("qa-server HTTP surface", () => {
  let server: Server;
  let base: string;

  beforeAll(async () => {
    const app = createApp(loadQaModel("lexical-v1"), loadEncoder("hashing-bow-512"));
    await new Promise<void>((resolve) => {
      server = app.listen(0, "127.0.0.1", () => resolve());
    });
    base = listen(server);
  });

  afterAll(async () => {
    await new Promise<void>((resolve, reject) => {
      server.close((err) => (err ? reject(err) : resolve()));
    });
  });

  it("reports the served model on /health", async () => {
    const reply = await fetch(base + "/health");
    expect(reply.status).toBe(200);
    expect(await reply.json()).toEqual({ status: "ok", model: "lexical-v1" });
  });

  it("answers probes with spans that satisfy the protocol invariants", async () => {
    for (const context of QUESTIONS) {
      for (const question of PROBES) {
        const reply = await post(base, "/qa", { context, question });
        expect(reply.status).toBe(200);
        const span = await reply.json();
        expect(span.score).toBeGreaterThanOrEqual(0);
        expect(span.score).toBeLessThanOrEqual(1);
        expect(span.start).toBeGreaterThanOrEqual(0);
        expect(span.end).toBeGreaterThanOrEqual(span.start);
        if (span.score > 0 && span.answer) {
          expect(context.slice(span.start, span.end)).toBe(span.answer);
        }
      }
    }
  });

  it("extracts the comparison phrase with the number", async () => {
    const reply = await post(base, "/qa", {
      context: QUESTIONS[1],
      question: "how many age",
    });
    const span = await reply.json();
    expect(span.answer).toBe("below age 40");
  });

  it("rejects an empty context with 400", async () => {
    const reply = await post(base, "/qa", { context: "", question: "how many year" });
    expect(reply.status).toBe(400);
    const body = await reply.json();
    expect(body.error).toContain("context");
  });

  it("rejects a missing question with 400", async () => {
    const reply = await post(base, "/qa", { context: "Give me the death count in 2012?" });
    expect(reply.status).toBe(400);
    const body = await reply.json();
    expect(body.error).toContain("question");
  });

  it("rejects a malformed JSON body with 400", async () => {
    const reply = await post(base, "/qa", "{not json");
    expect(reply.status).toBe(400);
  });

  it("encodes deterministically with the advertised width", async () => {
    const first = await (await post(base, "/encode", { text: "hello" })).json();
    const second = await (await post(base, "/encode", { text: "hello" })).json();
    expect(first.dim).toBe(512);
    expect(first.vector).toHaveLength(512);
    expect(second).toEqual(first);
  });

  it("rejects a non-string encode payload with 400", async () => {
    const reply = await post(base, "/encode", { text: 7 });
    expect(reply.status).toBe(400);
  });

  it("returns 404 for unknown routes", async () => {
    const reply = await fetch(base + "/nope");
    expect(reply.status).toBe(404);
  });
});

describe("engine failures", () => {
  it("surfaces per-request model errors as 500 with a JSON body", async () => {
    const broken: QaModel = {
      id: "broken",
      extract() {
        throw new Error("model exploded");
      },
    };
    const app = createApp(broken, loadEncoder("hashing-bow-512"));
    let server: Server;
    await new Promise<void>((resolve) => {
      server = app.listen(0, "127.0.0.1", () => resolve());
    });
    const base = listen(server!);
    try {
      const reply = await post(base, "/qa", { context: "anything", question: "how many age" });
      expect(reply.status).toBe(500);
      expect(await reply.json()).toEqual({ error: "model exploded" });
    } finally {
      await new Promise<void>((resolve, reject) => {
        server!.close((err) => (err ? reject(err) : resolve()));
      });
    }
  });
});
