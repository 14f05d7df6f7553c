import { LabelInfo, Prediction } from "../src/api.js";

export const LABEL_NAMES = [
  "ad hominem",
  "anecdote",
  "cherry picking",
  "conspiracy theory",
  "fake experts",
  "false choice",
  "false equivalence",
  "impossible expectations",
  "misrepresentation",
  "oversimplification",
  "single cause",
  "slothful induction",
];

export function makePrediction(label: string, topScore = 0.9): Prediction {
  const rest = (1 - topScore) / (LABEL_NAMES.length - 1);
  const scores: Record<string, number> = {};
  for (const name of LABEL_NAMES) scores[name] = name === label ? topScore : rest;
  return {
    label,
    scores,
    model_version: "test-checkpoint#deadbeef",
    input_hash: "0".repeat(64),
  };
}

export function makeLabelInfo(name: string): LabelInfo {
  return {
    canonical_name: name,
    display_name: name,
    fallacy_type: "structural",
    definition: `definition of ${name}`,
    argument_structure: `structure of ${name}`,
  };
}

type FetchCall = { url: string; init?: RequestInit };

export function stubFetch(
  handler: (url: string, init?: RequestInit) => { status: number; body: unknown } | Promise<{ status: number; body: unknown }>,
): { calls: FetchCall[] } {
  const calls: FetchCall[] = [];
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    calls.push({ url, init });
    const { status, body } = await handler(url, init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
  return { calls };
}
