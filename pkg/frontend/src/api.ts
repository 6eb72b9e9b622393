import type {
  AnalyticsPayload,
  ForecastPayload,
  GeoUnit,
  RiskPayload,
  ScenarioRequest,
  ScenarioResultPayload,
  ServiceError,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ServiceError | null,
    message?: string,
  ) {
    super(message ?? body?.detail ?? `service returned ${status}`);
  }

  /** Per-field validation messages, when the service sent any. */
  get fields(): Record<string, string> {
    return this.body?.fields ?? {};
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the service HTTP API.
 *
 * The fetch implementation is injectable so the view-model tests can run
 * without a browser or a live service.
 */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.base + path);
    return this.decode<T>(res);
  }

  private async decode<T>(res: Response): Promise<T> {
    if (res.ok) {
      return (await res.json()) as T;
    }
    let body: ServiceError | null = null;
    try {
      body = (await res.json()) as ServiceError;
    } catch {
      body = null;
    }
    throw new ApiError(res.status, body);
  }

  geoUnits(): Promise<{ units: GeoUnit[] }> {
    return this.get("/geo-units");
  }

  forecast(geoId: string): Promise<ForecastPayload> {
    return this.get(`/forecast/${encodeURIComponent(geoId)}`);
  }

  risk(geoId: string): Promise<RiskPayload> {
    return this.get(`/risk/${encodeURIComponent(geoId)}`);
  }

  analytics(geoId: string): Promise<AnalyticsPayload> {
    return this.get(`/analytics/${encodeURIComponent(geoId)}`);
  }

  async scenario(req: ScenarioRequest): Promise<ScenarioResultPayload> {
    const res = await this.fetchFn(this.base + "/scenario", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    return this.decode<ScenarioResultPayload>(res);
  }
}
