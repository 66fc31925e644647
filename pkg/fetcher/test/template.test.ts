import { describe, expect, it } from "vitest";

import { TemplateError } from "../src/errors.js";
import { applyContext } from "../src/template.js";

const PROMPT =
  "I listen to a solo piano performance of a classical piece of music " +
  "and I'd describe the character of the performance as TERM";

describe("applyContext", () => {
  it("substitutes each term into the placeholder slot", () => {
    const out = applyContext(["gentle"], PROMPT);
    expect(out).toEqual([
      "I listen to a solo piano performance of a classical piece of music " +
        "and I'd describe the character of the performance as gentle",
    ]);
  });

  it("keeps the term order", () => {
    expect(applyContext(["a", "b"], "x TERM y")).toEqual(["x a y", "x b y"]);
  });

  it("inserts terms verbatim, dollar patterns included", () => {
    // String.replace would expand $& here
    expect(applyContext(["$&"], "say TERM now")).toEqual(["say $& now"]);
  });

  it("rejects an empty template", () => {
    expect(() => applyContext(["a"], "")).toThrow(TemplateError);
    expect(() => applyContext(["a"], "   ")).toThrow(TemplateError);
  });

  it("rejects a template without the placeholder", () => {
    expect(() => applyContext(["a"], "no placeholder here")).toThrow(TemplateError);
  });

  it("rejects a template with two placeholders", () => {
    expect(() => applyContext(["a"], "TERM and TERM")).toThrow(TemplateError);
  });

  it("handles an empty term list", () => {
    expect(applyContext([], PROMPT)).toEqual([]);
  });
});
