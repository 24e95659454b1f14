#!/usr/bin/env node
// CLI entry point: resolve the requested engines, then serve. A model or
// encoder that cannot be loaded is a startup failure with a non-zero exit,
// not a half-alive server.

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { createApp } from "./app.js";
import { DEFAULT_ENCODER, DEFAULT_QA_MODEL, loadEncoder, loadQaModel } from "./engines.js";

const argv = await yargs(hideBin(process.argv))
  .scriptName("qa-server")
  .option("model", {
    type: "string",
    default: DEFAULT_QA_MODEL,
    describe: "QA model id to serve",
  })
  .option("encoder", {
    type: "string",
    default: DEFAULT_ENCODER,
    describe: "sentence encoder id to serve",
  })
  .option("port", {
    type: "number",
    default: 8090,
    describe: "TCP port to listen on",
  })
  .strict()
  .help()
  .parse();

function resolveEngines() {
  try {
    return { model: loadQaModel(argv.model), encoder: loadEncoder(argv.encoder) };
  } catch (err) {
    console.error(`qa-server: ${err instanceof Error ? err.message : String(err)}`);
    process.exit(1);
  }
}

const { model, encoder } = resolveEngines();
const app = createApp(model, encoder);

const server = app.listen(argv.port, () => {
  console.log(`qa-server listening on port ${argv.port} (model ${model.id}, encoder ${encoder.id})`);
});

for (const signal of ["SIGINT", "SIGTERM"] as const) {
  process.on(signal, () => {
    server.close(() => process.exit(0));
  });
}
