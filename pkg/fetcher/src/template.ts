import { TemplateError } from "./errors.js";

export const PLACEHOLDER = "TERM";

/**
 * Substitute each term into a prompt template.
 *
 * The template must contain the TERM placeholder exactly once; the term
 * goes in verbatim. split/join instead of String.replace so terms
 * containing `$` sequences cannot trigger replacement-pattern expansion.
 */
export function applyContext(terms: string[], template: string): string[] {
  if (!template.trim()) {
    throw new TemplateError("context template is empty");
  }
  const parts = template.split(PLACEHOLDER);
  if (parts.length !== 2) {
    const n = parts.length - 1;
    throw new TemplateError(
      `context template must contain ${PLACEHOLDER} exactly once, found ${n}`,
    );
  }
  return terms.map((term) => parts[0] + term + parts[1]);
}
