/**
 * Prompt template handling: one template per line, "{class}" placeholder.
 * Negation inserts "no " before the class token, so
 * "a photo of {class}." becomes "a photo of no cat." for class "cat".
 */

import { readFileSync } from "node:fs";

export const CLASS_PLACEHOLDER = "{class}";
export const NEGATION_WORD = "no";

export function renderPrompt(template: string, className: string): string {
  if (!template.includes(CLASS_PLACEHOLDER)) {
    throw new Error(`template ${JSON.stringify(template)} has no ${CLASS_PLACEHOLDER} placeholder`);
  }
  return template.split(CLASS_PLACEHOLDER).join(className);
}

export function negatePrompt(template: string, className: string): string {
  return renderPrompt(template, `${NEGATION_WORD} ${className}`);
}

/** Non-empty, non-comment lines of a prompt file, order preserved. */
export function loadPromptFile(path: string): string[] {
  const lines = readFileSync(path, "utf-8")
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0 && !line.startsWith("#"));
  if (lines.length === 0) {
    throw new Error(`prompt file ${path} has no prompts`);
  }
  for (const line of lines) {
    if (!line.includes(CLASS_PLACEHOLDER)) {
      throw new Error(`prompt ${JSON.stringify(line)} in ${path} has no ${CLASS_PLACEHOLDER}`);
    }
  }
  return lines;
}
