import { ApiClient, ApiError } from "./api.js";
import { trailingRisk } from "./risk.js";
import type {
  AnalyticsPayload,
  Band,
  ForecastPayload,
  GeoUnit,
  RiskPayload,
  ScenarioRequest,
  ScenarioResultPayload,
} from "./types.js";

export interface ScenarioForm {
  adjust: number;
  from: string;       // ISO date
  horizon: number;
  label?: string;
}

export interface ScenarioEntry {
  readonly result: ScenarioResultPayload;
  readonly color: string;
  readonly label: string;
  /** Badge computed from the returned series; null when too short. */
  readonly risk: number | null;
}

export interface SeriesView {
  readonly name: string;
  readonly color: string;
  readonly band: Band;         // payload arrays, by reference
  readonly dates: string[];
  readonly showInterval: boolean;
  readonly risk: number | null;
}

const PALETTE = ["#d95f02", "#7570b3", "#e7298a", "#66a61e",
                 "#e6ab02", "#a6761d", "#666666"];
export const BASE_COLOR = "#1b9e77";

const DAY_MS = 86_400_000;

export function addDays(iso: string, days: number): string {
  const d = new Date(`${iso}T00:00:00Z`);
  return new Date(d.getTime() + days * DAY_MS).toISOString().slice(0, 10);
}

/** All state behind the scenario explorer, free of any DOM references.
 *
 * The page layer renders from this object and forwards events into it;
 * every series it exposes is a service response held by reference, so what
 * the charts draw is exactly what the service said.
 */
export class ScenarioView {
  units: GeoUnit[] = [];
  geoId: string | null = null;
  forecast: ForecastPayload | null = null;
  risk: RiskPayload | null = null;
  analytics: AnalyticsPayload | null = null;
  scenarios: ScenarioEntry[] = [];
  banner: string | null = null;
  fieldErrors: Record<string, string> = {};
  loading = false;

  /** Serializes scenario POSTs so overlays land in submission order. */
  private queue: Promise<unknown> = Promise.resolve();

  constructor(private readonly api: ApiClient) {}

  async loadUnits(): Promise<void> {
    try {
      const res = await this.api.geoUnits();
      this.units = res.units;
      this.banner = null;
    } catch (err) {
      this.banner = describe(err, "could not list geo units");
    }
  }

  async select(geoId: string): Promise<void> {
    this.loading = true;
    try {
      const [forecast, risk, analytics] = await Promise.all([
        this.api.forecast(geoId),
        this.api.risk(geoId),
        this.api.analytics(geoId),
      ]);
      this.geoId = geoId;
      this.forecast = forecast;
      this.risk = risk;
      this.analytics = analytics;
      this.scenarios = [];
      this.fieldErrors = {};
      this.banner = null;
    } catch (err) {
      // keep whatever was on screen; just explain what went wrong
      this.banner = describe(err, `could not load ${geoId}`);
    } finally {
      this.loading = false;
    }
  }

  population(): number | null {
    const unit = this.units.find((u) => u.id === this.geoId);
    return unit?.population ?? null;
  }

  /** Axis-unit conversion only: per 100K when the population is known. */
  per100kFactor(): number {
    const pop = this.population();
    return pop && pop > 0 ? 1e5 / pop : 1;
  }

  axisLabel(): string {
    return this.population() ? "daily cases / 100K" : "daily cases";
  }

  trainEnd(): string | null {
    const fc = this.forecast;
    if (!fc) return null;
    return fc.dates[fc.train_days - 1] ?? null;
  }

  /** The service accepts adjustment dates in [train end - 7, train end + horizon]. */
  dateWindow(horizon: number): { lo: string; hi: string } | null {
    const end = this.trainEnd();
    if (end === null) return null;
    return { lo: addDays(end, -7), hi: addDays(end, horizon) };
  }

  defaultForm(): ScenarioForm {
    return {
      adjust: -5,
      from: this.trainEnd() ?? "",
      horizon: this.forecast?.horizon ?? 28,
      label: "",
    };
  }

  /** Pure field validation; an empty result means the form may be sent. */
  validate(form: ScenarioForm): Record<string, string> {
    const errors: Record<string, string> = {};
    if (!Number.isFinite(form.adjust) || form.adjust < -100 || form.adjust > 100) {
      errors.adjust = "adjustment must be between -100% and +100%";
    }
    if (!Number.isInteger(form.horizon) || form.horizon < 1) {
      errors.horizon = "horizon must be a whole number of days, at least 1";
    }
    if (!/^\d{4}-\d{2}-\d{2}$/.test(form.from)) {
      errors.from = "pick a start date";
    } else if (Number.isInteger(form.horizon) && form.horizon >= 1) {
      const win = this.dateWindow(form.horizon);
      if (win && (form.from < win.lo || form.from > win.hi)) {
        errors.from = `date must fall between ${win.lo} and ${win.hi}`;
      }
    }
    return errors;
  }

  /** Validate, then queue the POST; invalid forms never reach the network.
   *
   * Resolves true when an overlay was added.  A service rejection surfaces
   * as field errors or a banner and leaves existing overlays untouched.
   */
  submitScenario(form: ScenarioForm): Promise<boolean> {
    if (!this.geoId || !this.forecast) {
      this.banner = "select a geo unit first";
      return Promise.resolve(false);
    }
    const errors = this.validate(form);
    if (Object.keys(errors).length > 0) {
      this.fieldErrors = errors;
      return Promise.resolve(false);
    }
    this.fieldErrors = {};
    const req: ScenarioRequest = {
      geo_id: this.geoId,
      adjust: form.adjust,
      from: form.from,
      horizon: form.horizon,
      label: form.label ?? "",
    };
    const run = this.queue.then(() => this.post(req, form));
    this.queue = run.catch(() => undefined);
    return run;
  }

  private async post(req: ScenarioRequest, form: ScenarioForm): Promise<boolean> {
    try {
      const result = await this.api.scenario(req);
      const th = this.risk?.thresholds;
      const factor = this.per100kFactor();
      const scaled = result.scenario.daily_cases.central.map((v) => v * factor);
      this.scenarios = [...this.scenarios, {
        result,
        color: PALETTE[this.scenarios.length % PALETTE.length],
        label: form.label || formatSpec(form),
        risk: th ? trailingRisk(scaled, th) : null,
      }];
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        this.fieldErrors = err.fields;
      } else {
        this.banner = describe(err, "scenario request failed");
      }
      return false;
    }
  }

  clearScenarios(): void {
    this.scenarios = [];
    this.fieldErrors = {};
  }

  /** Everything the daily-cases chart should draw, base first. */
  series(): SeriesView[] {
    const fc = this.forecast;
    if (!fc) return [];
    const out: SeriesView[] = [{
      name: "base forecast",
      color: BASE_COLOR,
      band: fc.daily_cases,
      dates: fc.dates,
      showInterval: true,
      risk: this.risk?.current_risk ?? null,
    }];
    for (const s of this.scenarios) {
      out.push({
        name: s.label,
        color: s.color,
        band: s.result.scenario.daily_cases,
        dates: s.result.scenario.dates,
        showInterval: false,
        risk: s.risk,
      });
    }
    return out;
  }

  deathSeries(): SeriesView[] {
    const fc = this.forecast;
    if (!fc) return [];
    return [{
      name: "cumulative deaths",
      color: BASE_COLOR,
      band: fc.cum_deaths,
      dates: fc.dates,
      showInterval: true,
      risk: null,
    }];
  }
}

function formatSpec(form: ScenarioForm): string {
  const sign = form.adjust > 0 ? "+" : "";
  return `${sign}${form.adjust}% from ${form.from}`;
}

function describe(err: unknown, fallback: string): string {
  if (err instanceof ApiError) {
    return err.body?.detail ?? `${fallback} (HTTP ${err.status})`;
  }
  return err instanceof Error ? `${fallback}: ${err.message}` : fallback;
}
