import { addDays } from "../src/view.js";
import type {
  AnalyticsPayload,
  ForecastPayload,
  GeoUnit,
  RiskPayload,
  ScenarioRequest,
  ScenarioResultPayload,
} from "../src/types.js";

/** In-memory stand-in for the forecasting service, driven through the
 * injectable fetch.  Mirrors the real response shapes closely enough that
 * the view-model cannot tell the difference.
 */

export function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export function makeForecast(
  geoId: string,
  trainDays = 30,
  horizon = 28,
  start = "2021-01-01",
): ForecastPayload {
  const n = trainDays + horizon;
  const dates = Array.from({ length: n }, (_, i) => addDays(start, i));
  const central = Array.from({ length: n }, (_, i) => 10 + i);
  let run = 0;
  const cum = central.map((v) => (run += v));
  return {
    geo_id: geoId,
    dates,
    train_days: trainDays,
    horizon,
    daily_cases: {
      central,
      lower: central.map((v) => v * 0.8),
      upper: central.map((v) => v * 1.25),
    },
    cum_cases: {
      central: cum,
      lower: cum.map((v) => v * 0.9),
      upper: cum.map((v) => v * 1.1),
    },
    cum_deaths: {
      central: cum.map((v) => v * 0.01),
      lower: cum.map((v) => v * 0.008),
      upper: cum.map((v) => v * 0.013),
    },
  };
}

export function makeRisk(geoId: string): RiskPayload {
  return {
    geo_id: geoId,
    current_risk: 4,
    projected_risks: [4, 3],
    thresholds: { kappa: 10, lambda: 5, tau: 2 },
  };
}

export function makeAnalytics(geoId: string): AnalyticsPayload {
  return {
    geo_id: geoId,
    r0: 2.8,
    r_t: 0.92,
    growth_rate: -0.013,
    doubling_time: null,
    not_doubling: true,
  };
}

/** What the service would return for a scenario: base and adjusted series
 * over the window [train end - 7, train end + horizon], the adjustment
 * applied from `req.from` onward.
 */
export function scenarioResult(
  req: ScenarioRequest,
  base: ForecastPayload,
): ScenarioResultPayload {
  const startIdx = base.train_days - 8;
  const n = 8 + req.horizon;
  const dates = Array.from({ length: n }, (_, k) =>
    addDays(base.dates[0], startIdx + k));
  const baseDaily = dates.map((_, k) => {
    const idx = Math.min(startIdx + k, base.dates.length - 1);
    return base.daily_cases.central[idx];
  });
  const scaled = baseDaily.map((v, k) =>
    dates[k] >= req.from ? v * (1 + req.adjust / 100) : v);
  const wrap = (central: number[]): ForecastPayload => {
    let run = 0;
    const cum = central.map((v) => (run += v));
    return {
      geo_id: req.geo_id,
      dates,
      train_days: 8,
      horizon: req.horizon,
      daily_cases: { central, lower: [...central], upper: [...central] },
      cum_cases: { central: cum, lower: [...cum], upper: [...cum] },
      cum_deaths: {
        central: cum.map((v) => v * 0.01),
        lower: cum.map((v) => v * 0.01),
        upper: cum.map((v) => v * 0.01),
      },
    };
  };
  return {
    spec: {
      geo_id: req.geo_id,
      adjust: req.adjust,
      from: req.from,
      horizon: req.horizon,
      label: req.label ?? "",
    },
    base: wrap(baseDaily),
    scenario: wrap(scaled),
  };
}

type ScenarioHook = (req: ScenarioRequest) => Promise<Response> | Response;

export interface FakeService {
  fetchFn: (input: string, init?: RequestInit) => Promise<Response>;
  /** Every decoded POST /scenario body, in arrival order. */
  posts: ScenarioRequest[];
  /** Every scenario payload actually served, in order. */
  served: ScenarioResultPayload[];
  /** Replace the scenario handler (e.g. to delay or fail a call). */
  onScenario(hook: ScenarioHook | null): void;
}

export function makeService(
  units: GeoUnit[],
  forecasts: Record<string, ForecastPayload>,
): FakeService {
  const posts: ScenarioRequest[] = [];
  const served: ScenarioResultPayload[] = [];
  let hook: ScenarioHook | null = null;

  const fetchFn = async (input: string, init?: RequestInit) => {
    if (input === "/geo-units") return json({ units });
    const m = /^\/(forecast|risk|analytics)\/([^/]+)$/.exec(input);
    if (m) {
      const geoId = decodeURIComponent(m[2]);
      if (!(geoId in forecasts)) {
        return json({ error: "not_found", detail: `no unit ${geoId}` }, 404);
      }
      if (m[1] === "forecast") return json(forecasts[geoId]);
      if (m[1] === "risk") return json(makeRisk(geoId));
      return json(makeAnalytics(geoId));
    }
    if (input === "/scenario" && init?.method === "POST") {
      const req = JSON.parse(init.body as string) as ScenarioRequest;
      posts.push(req);
      if (hook) return hook(req);
      const result = scenarioResult(req, forecasts[req.geo_id]);
      served.push(result);
      return json(result);
    }
    return json({ error: "not_found", detail: `no route ${input}` }, 404);
  };

  return { fetchFn, posts, served, onScenario: (h) => { hook = h; } };
}

export const UNITS: GeoUnit[] = [
  { id: "c0", population: 100_000, artifacts: { forecast: 12.5, fit: 12.5 } },
  { id: "c1", population: 250_000, artifacts: { forecast: 40.0, fit: 40.0 } },
];

export function standardService(): FakeService {
  return makeService(UNITS, {
    c0: makeForecast("c0"),
    c1: makeForecast("c1", 40, 21),
  });
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
