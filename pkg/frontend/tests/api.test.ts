import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { LABEL_NAMES, makeLabelInfo, makePrediction, stubFetch } from "./helpers.js";

describe("ApiClient", () => {
  let api: ApiClient;

  beforeEach(() => {
    api = new ApiClient("http://api.test");
  });

  it("fetches the taxonomy", async () => {
    const payload = { version: 1, labels: LABEL_NAMES.map(makeLabelInfo) };
    const { calls } = stubFetch(() => ({ status: 200, body: payload }));
    const taxonomy = await api.labels();
    expect(calls[0].url).toBe("http://api.test/labels");
    expect(taxonomy).toEqual(payload);
  });

  it("posts predictions as JSON", async () => {
    const prediction = makePrediction("fake experts");
    const { calls } = stubFetch(() => ({ status: 200, body: prediction }));
    const result = await api.predict("Thousands of scientists signed.");
    expect(result).toEqual(prediction);
    expect(calls[0].url).toBe("http://api.test/predict");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      text: "Thousands of scientists signed.",
    });
  });

  it("surfaces API error codes", async () => {
    stubFetch(() => ({
      status: 400,
      body: { error: "EmptyText", detail: "cannot classify empty text" },
    }));
    const failure = await api.predict("").catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(400);
    expect(failure.code).toBe("EmptyText");
  });

  it("surfaces server errors without JSON bodies", async () => {
    globalThis.fetch = (async () => new Response("boom", { status: 500 })) as typeof fetch;
    const failure = await api.labels().catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(500);
  });
});
