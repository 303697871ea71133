/**
 * Bundle extraction: encode train/test image folders and per-class prompt
 * ensembles, then write an EMB1 bundle directory.
 *
 * Prompt features are stored RAW (one row per prompt, class-major, with
 * per-class counts in the manifest) so that ensembling happens in one
 * place downstream. Feature order is contractual: classes follow the
 * class-list order; files within a class are sorted lexicographically.
 */

import { createHash } from "node:crypto";
import { mkdirSync, readFileSync, readdirSync, statSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { encodeEmb1 } from "./emb1.js";
import { Encoder } from "./encoder.js";
import { loadPromptFile, negatePrompt, renderPrompt } from "./prompts.js";

export interface ExtractionManifest {
  trainDir: string;
  testDir: string;
  classListPath: string;
  promptFilePath: string;
  negativePromptFilePath?: string;
  datasetName: string;
  outputDir: string;
}

export interface ExtractionResult {
  dim: number;
  classNames: string[];
  trainCount: number;
  testCount: number;
  promptsPerClass: { positive: number[]; negative: number[] };
}

const IMAGE_EXTENSIONS = new Set([".jpg", ".jpeg", ".png", ".bmp", ".gif", ".webp", ".tif", ".tiff"]);

function isImageFile(name: string): boolean {
  const dot = name.lastIndexOf(".");
  return dot >= 0 && IMAGE_EXTENSIONS.has(name.slice(dot).toLowerCase());
}

export function loadClassList(path: string): string[] {
  const parsed = JSON.parse(readFileSync(path, "utf-8"));
  if (!Array.isArray(parsed) || parsed.length === 0 || !parsed.every((c) => typeof c === "string")) {
    throw new Error(`${path} must be a non-empty JSON array of class names`);
  }
  return parsed;
}

/** Image paths of one class folder, lexicographically sorted. */
export function listClassImages(splitDir: string, className: string): string[] {
  const dir = join(splitDir, className);
  let entries: string[];
  try {
    entries = readdirSync(dir);
  } catch {
    throw new Error(`class ${JSON.stringify(className)} has no folder under ${splitDir}`);
  }
  const files = entries
    .filter((name) => isImageFile(name) && statSync(join(dir, name)).isFile())
    .sort();
  if (files.length === 0) {
    throw new Error(`class ${JSON.stringify(className)} has no images under ${splitDir}`);
  }
  return files.map((name) => join(dir, name));
}

function sha256File(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

export async function extract(
  manifest: ExtractionManifest,
  encoder: Encoder
): Promise<ExtractionResult> {
  const classNames = loadClassList(manifest.classListPath);
  const templates = loadPromptFile(manifest.promptFilePath);
  const negativeTemplates = manifest.negativePromptFilePath
    ? loadPromptFile(manifest.negativePromptFilePath)
    : templates; // default: negate the hand-crafted templates themselves

  let dim = 0;
  const checkDim = (vec: Float32Array, what: string): Float32Array => {
    if (dim === 0) {
      dim = vec.length; // output width declared by the encoder at runtime
    } else if (vec.length !== dim) {
      throw new Error(`${what}: encoder returned dim ${vec.length}, expected ${dim}`);
    }
    return vec;
  };

  const encodeSplit = async (splitDir: string) => {
    const features: Float32Array[] = [];
    const labels: number[] = [];
    for (let k = 0; k < classNames.length; k += 1) {
      for (const path of listClassImages(splitDir, classNames[k] as string)) {
        features.push(checkDim(await encoder.encodeImage(path), path));
        labels.push(k);
      }
    }
    return { features, labels };
  };

  const train = await encodeSplit(manifest.trainDir);
  const test = await encodeSplit(manifest.testDir);

  const promptRows: { positive: Float32Array[]; negative: Float32Array[] } = {
    positive: [],
    negative: [],
  };
  const promptCounts = { positive: [] as number[], negative: [] as number[] };
  const promptLog: Record<string, { positive: string[]; negative: string[] }> = {};
  for (const className of classNames) {
    const rendered = templates.map((t) => renderPrompt(t, className));
    const negated = negativeTemplates.map((t) => negatePrompt(t, className));
    promptLog[className] = { positive: rendered, negative: negated };
    for (const prompt of rendered) {
      promptRows.positive.push(checkDim(await encoder.encodeText(prompt), prompt));
    }
    for (const prompt of negated) {
      promptRows.negative.push(checkDim(await encoder.encodeText(prompt), prompt));
    }
    promptCounts.positive.push(rendered.length);
    promptCounts.negative.push(negated.length);
  }

  mkdirSync(manifest.outputDir, { recursive: true });
  const arrays: Record<string, string> = {
    train_features: "train_features.emb1",
    test_features: "test_features.emb1",
    prompts_positive: "prompts_positive.emb1",
    prompts_negative: "prompts_negative.emb1",
  };
  writeFileSync(join(manifest.outputDir, "train_features.emb1"), encodeEmb1(train.features, dim));
  writeFileSync(join(manifest.outputDir, "test_features.emb1"), encodeEmb1(test.features, dim));
  writeFileSync(
    join(manifest.outputDir, "prompts_positive.emb1"),
    encodeEmb1(promptRows.positive, dim)
  );
  writeFileSync(
    join(manifest.outputDir, "prompts_negative.emb1"),
    encodeEmb1(promptRows.negative, dim)
  );

  const bundleManifest = {
    format: "tdha-bundle",
    version: 1,
    dim,
    class_names: classNames,
    metadata: {
      source: "extractor",
      dataset: manifest.datasetName,
      model: encoder.id,
      prompt_file_sha256: sha256File(manifest.promptFilePath),
      prompts_per_class_positive: String(templates.length),
      prompts_per_class_negative: String(negativeTemplates.length),
    },
    arrays,
    labels: { train: train.labels, test: test.labels },
    prompt_counts: promptCounts,
  };
  writeFileSync(
    join(manifest.outputDir, "manifest.json"),
    canonicalJson(bundleManifest) + "\n",
    "utf-8"
  );
  writeFileSync(
    join(manifest.outputDir, "prompts.json"),
    canonicalJson(promptLog) + "\n",
    "utf-8"
  );

  return {
    dim,
    classNames,
    trainCount: train.labels.length,
    testCount: test.labels.length,
    promptsPerClass: promptCounts,
  };
}

/** JSON with sorted keys so identical inputs produce identical bytes. */
export function canonicalJson(value: unknown): string {
  return JSON.stringify(sortKeys(value), null, 2);
}

function sortKeys(value: unknown): unknown {
  if (Array.isArray(value)) {
    return value.map(sortKeys);
  }
  if (value !== null && typeof value === "object") {
    return Object.fromEntries(
      Object.entries(value as Record<string, unknown>)
        .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
        .map(([k, v]) => [k, sortKeys(v)])
    );
  }
  return value;
}
