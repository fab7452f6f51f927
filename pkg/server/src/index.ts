import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { createApp, DEFAULT_CONFIG } from "./app";
import { EchoClient, ModelClient, OllamaClient } from "./model";

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .option("port", { type: "number", default: 8077 })
    .option("model", {
      type: "string",
      default: "qwen-vl",
      describe: "model name the upstream runtime should serve",
    })
    .option("echo", {
      type: "boolean",
      default: false,
      describe: "answer every request with a fixed reply (no model needed)",
    })
    .option("echo-reply", { type: "string", default: "no" })
    .option("upstream-url", {
      type: "string",
      default: "http://127.0.0.1:11434",
      describe: "Ollama-compatible runtime holding the model weights",
    })
    .option("max-concurrent", { type: "number", default: DEFAULT_CONFIG.maxConcurrent })
    .option("queue-limit", { type: "number", default: DEFAULT_CONFIG.queueLimit })
    .strict()
    .parse();

  if (argv["max-concurrent"] < 1) {
    throw new Error("--max-concurrent must be >= 1");
  }

  const client: ModelClient = argv.echo
    ? new EchoClient(argv["echo-reply"])
    : new OllamaClient({ upstreamUrl: argv["upstream-url"], model: argv.model });

  const app = createApp(client, {
    maxConcurrent: argv["max-concurrent"],
    queueLimit: argv["queue-limit"],
    maxImageBytes: DEFAULT_CONFIG.maxImageBytes,
  });

  app.listen(argv.port, () => {
    const mode = argv.echo ? `echo (reply=${JSON.stringify(argv["echo-reply"])})` : `model ${argv.model}`;
    console.log(`answer server listening on :${argv.port} in ${mode} mode`);
  });
}

main().catch((error) => {
  console.error(error instanceof Error ? error.message : error);
  process.exit(1);
});
