import { execFileSync } from "node:child_process";
import { mkdirSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { decodeEmb1 } from "../src/emb1.js";
import { MockEncoder, createEncoder } from "../src/encoder.js";
import { extract } from "../src/extract.js";

const CLASSES = ["cat", "dog", "bird"];

function makeDataset(root: string): void {
  // The mock encoder hashes file bytes, so any distinct binary works as an "image".
  let stamp = 0;
  for (const split of ["train", "test"]) {
    for (const cls of CLASSES) {
      const dir = join(root, split, cls);
      mkdirSync(dir, { recursive: true });
      const count = split === "train" ? 4 : 2;
      for (let i = 0; i < count; i += 1) {
        stamp += 1;
        writeFileSync(join(dir, `img_${i}.png`), Buffer.from([0x89, 0x50, stamp, i]));
      }
      writeFileSync(join(dir, "notes.txt"), "not an image");
    }
  }
  writeFileSync(join(root, "classes.json"), JSON.stringify(CLASSES));
  writeFileSync(join(root, "prompts.txt"), "a photo of {class}.\nart of the {class}.\n");
}

describe("bundle extraction", () => {
  let root: string;
  let outDir: string;

  beforeAll(async () => {
    root = mkdtempSync(join(tmpdir(), "extract-"));
    outDir = join(root, "bundle");
    makeDataset(root);
    await extract(
      {
        trainDir: join(root, "train"),
        testDir: join(root, "test"),
        classListPath: join(root, "classes.json"),
        promptFilePath: join(root, "prompts.txt"),
        datasetName: "toy",
        outputDir: outDir,
      },
      new MockEncoder(32)
    );
  });

  it("writes a manifest with dim from the encoder and raw prompt counts", () => {
    const manifest = JSON.parse(readFileSync(join(outDir, "manifest.json"), "utf-8"));
    expect(manifest.format).toBe("tdha-bundle");
    expect(manifest.version).toBe(1);
    expect(manifest.dim).toBe(32);
    expect(manifest.class_names).toEqual(CLASSES);
    expect(manifest.prompt_counts).toEqual({ positive: [2, 2, 2], negative: [2, 2, 2] });
    expect(manifest.labels.train).toEqual([0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    expect(manifest.labels.test).toEqual([0, 0, 1, 1, 2, 2]);
    expect(manifest.metadata.model).toBe("mock-32");
    expect(manifest.metadata.prompt_file_sha256).toMatch(/^[0-9a-f]{64}$/);
  });

  it("writes EMB1 arrays with matching shapes and unit-norm features", () => {
    const train = decodeEmb1(readFileSync(join(outDir, "train_features.emb1")));
    expect(train.rows).toBe(12);
    expect(train.dim).toBe(32);
    for (let r = 0; r < train.rows; r += 1) {
      let normSq = 0;
      for (let c = 0; c < train.dim; c += 1) {
        const v = train.data[r * train.dim + c] as number;
        normSq += v * v;
      }
      expect(Math.abs(Math.sqrt(normSq) - 1)).toBeLessThan(1e-5);
    }
    const prompts = decodeEmb1(readFileSync(join(outDir, "prompts_positive.emb1")));
    expect(prompts.rows).toBe(6); // 3 classes x 2 templates, class-major
  });

  it("records negated prompt strings", () => {
    const log = JSON.parse(readFileSync(join(outDir, "prompts.json"), "utf-8"));
    expect(log.cat.negative).toContain("a photo of no cat.");
    expect(log.dog.positive).toContain("a photo of dog.");
  });

  it("re-running with identical inputs produces bit-identical payloads", async () => {
    const again = join(root, "bundle-again");
    await extract(
      {
        trainDir: join(root, "train"),
        testDir: join(root, "test"),
        classListPath: join(root, "classes.json"),
        promptFilePath: join(root, "prompts.txt"),
        datasetName: "toy",
        outputDir: again,
      },
      new MockEncoder(32)
    );
    for (const name of [
      "manifest.json",
      "train_features.emb1",
      "test_features.emb1",
      "prompts_positive.emb1",
      "prompts_negative.emb1",
    ]) {
      expect(readFileSync(join(again, name)).equals(readFileSync(join(outDir, name)))).toBe(true);
    }
  });

  it("feature order follows class list then sorted filenames", async () => {
    // Rename a file so it sorts first; its feature row must move accordingly.
    const moved = join(root, "moved");
    mkdirSync(moved, { recursive: true });
    const encoder = new MockEncoder(16);
    const imgA = join(root, "train", "cat", "img_0.png");
    const vecA = await encoder.encodeImage(imgA);
    const out = join(root, "bundle-order");
    await extract(
      {
        trainDir: join(root, "train"),
        testDir: join(root, "test"),
        classListPath: join(root, "classes.json"),
        promptFilePath: join(root, "prompts.txt"),
        datasetName: "toy",
        outputDir: out,
      },
      new MockEncoder(16)
    );
    const train = decodeEmb1(readFileSync(join(out, "train_features.emb1")));
    for (let c = 0; c < 16; c += 1) {
      expect(train.data[c]).toBe(vecA[c] as number);
    }
  });

  it("rejects a class with no image folder", async () => {
    writeFileSync(join(root, "extra.json"), JSON.stringify([...CLASSES, "ghost"]));
    await expect(
      extract(
        {
          trainDir: join(root, "train"),
          testDir: join(root, "test"),
          classListPath: join(root, "extra.json"),
          promptFilePath: join(root, "prompts.txt"),
          datasetName: "toy",
          outputDir: join(root, "bundle-ghost"),
        },
        new MockEncoder(8)
      )
    ).rejects.toThrow(/ghost/);
  });

  it("clip encoder without the optional dependency raises a clear error", async () => {
    const clip = createEncoder("clip", {});
    await expect(clip.encodeText("a photo of cat")).rejects.toThrow(/@xenova\/transformers/);
  });

  it("bundle loads in the downstream evaluation engine", () => {
    let ok = true;
    let output = "";
    try {
      output = execFileSync(
        "python3",
        [
          "-c",
          [
            "import sys, warnings",
            "warnings.filterwarnings('ignore')",
            "from tdha.data.io import read_bundle",
            "b = read_bundle(sys.argv[1])",
            "print(b.class_count, b.dim, b.text_positive.shape[0])",
          ].join("\n"),
          outDir,
        ],
        { encoding: "utf-8" }
      );
    } catch {
      ok = false; // engine not installed in this environment
    }
    if (ok) {
      expect(output.trim()).toBe("3 32 3");
    }
  });
});
