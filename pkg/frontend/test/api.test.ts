import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { json } from "./fixtures.js";

describe("ApiClient", () => {
  it("hits the documented routes", async () => {
    const calls: Array<[string, string]> = [];
    const api = new ApiClient("", async (input, init) => {
      calls.push([init?.method ?? "GET", input]);
      return json({ units: [] });
    });
    await api.geoUnits();
    await api.forecast("king county");
    await api.risk("c0");
    await api.analytics("c0");
    await api.scenario({
      geo_id: "c0", adjust: -5, from: "2021-01-30", horizon: 14,
    });
    expect(calls).toEqual([
      ["GET", "/geo-units"],
      ["GET", "/forecast/king%20county"],
      ["GET", "/risk/c0"],
      ["GET", "/analytics/c0"],
      ["POST", "/scenario"],
    ]);
  });

  it("posts scenarios as JSON", async () => {
    let captured: RequestInit | undefined;
    const api = new ApiClient("", async (_input, init) => {
      captured = init;
      return json({});
    });
    const req = { geo_id: "c0", adjust: 0, from: "2021-01-30", horizon: 7 };
    await api.scenario(req);
    expect(captured?.headers).toEqual({ "content-type": "application/json" });
    expect(JSON.parse(captured?.body as string)).toEqual(req);
  });

  it("prefixes an explicit base URL", async () => {
    const seen: string[] = [];
    const api = new ApiClient("http://localhost:8000", async (input) => {
      seen.push(input);
      return json({ units: [] });
    });
    await api.geoUnits();
    expect(seen).toEqual(["http://localhost:8000/geo-units"]);
  });

  it("turns service errors into ApiError with the decoded body", async () => {
    const api = new ApiClient("", async () =>
      json({ error: "validation", fields: { adjust: "too big" } }, 422));
    const err = await api.forecast("c0").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).fields).toEqual({ adjust: "too big" });
  });

  it("copes with non-JSON error bodies", async () => {
    const api = new ApiClient("", async () =>
      new Response("<html>bad gateway</html>", { status: 502 }));
    const err = await api.geoUnits().catch((e: unknown) => e) as ApiError;
    expect(err.status).toBe(502);
    expect(err.body).toBeNull();
    expect(err.fields).toEqual({});
    expect(err.message).toContain("502");
  });
});
