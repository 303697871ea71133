/**
 * Command-line entry point.
 *
 * tdha-extract --train-dir data/train --test-dir data/test \
 *   --classes classes.json --prompts prompts.txt --output bundle/ \
 *   [--neg-prompts negatives.txt] [--encoder mock|clip] [--dim 64]
 *   [--model Xenova/clip-vit-base-patch32] [--dataset name]
 */

import { pathToFileURL } from "node:url";

import { createEncoder } from "./encoder.js";
import { extract } from "./extract.js";

interface Flags {
  [key: string]: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key || !key.startsWith("--") || value === undefined) {
      throw new Error(`malformed arguments near ${JSON.stringify(key ?? "")}`);
    }
    flags[key.slice(2)] = value;
  }
  return flags;
}

function required(flags: Flags, name: string): string {
  const value = flags[name];
  if (!value) {
    throw new Error(`--${name} is required`);
  }
  return value;
}

export async function run(argv: string[]): Promise<number> {
  let flags: Flags;
  try {
    flags = parseFlags(argv);
    const encoder = createEncoder(flags["encoder"] ?? "mock", {
      dim: flags["dim"] ? Number(flags["dim"]) : undefined,
      model: flags["model"],
    });
    const result = await extract(
      {
        trainDir: required(flags, "train-dir"),
        testDir: required(flags, "test-dir"),
        classListPath: required(flags, "classes"),
        promptFilePath: required(flags, "prompts"),
        negativePromptFilePath: flags["neg-prompts"],
        datasetName: flags["dataset"] ?? "unnamed",
        outputDir: required(flags, "output"),
      },
      encoder
    );
    console.log(
      `wrote bundle: ${result.classNames.length} classes, dim ${result.dim}, ` +
        `${result.trainCount} train / ${result.testCount} test images -> ${flags["output"]}`
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  run(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
