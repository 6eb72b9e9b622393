/** Wire types for the forecasting service, mirrored from its JSON artifacts.
 *
 * Everything here is read-only on purpose: the UI never edits service data,
 * it only selects, overlays and restyles it.
 */

export interface Band {
  readonly central: number[];
  readonly lower: number[];
  readonly upper: number[];
}

export interface ForecastPayload {
  readonly geo_id: string;
  readonly dates: string[];          // ISO dates, one per model day
  readonly train_days: number;       // first `train_days` dates are history
  readonly horizon: number;
  readonly daily_cases: Band;
  readonly cum_cases: Band;
  readonly cum_deaths: Band;
}

export interface Thresholds {
  readonly kappa: number;
  readonly lambda: number;
  readonly tau: number;
}

export interface RiskPayload {
  readonly geo_id: string;
  readonly current_risk: number;     // 1 (safest) .. 6
  readonly projected_risks: number[];
  readonly thresholds: Thresholds;
}

export interface AnalyticsPayload {
  readonly geo_id: string;
  readonly r0: number;
  readonly r_t: number;
  readonly growth_rate: number | null;
  readonly doubling_time: number | null;
  readonly not_doubling: boolean;
}

export interface GeoUnit {
  readonly id: string;
  readonly population: number | null;
  readonly artifacts: Record<string, number | null>;  // kind -> age seconds
}

export interface ScenarioRequest {
  geo_id: string;
  adjust: number;                    // percent, -100 .. +100
  from: string;                      // ISO date
  horizon: number;
  label?: string;
}

export interface ScenarioResultPayload {
  readonly spec: {
    readonly geo_id: string;
    readonly adjust: number;
    readonly from: string;
    readonly horizon: number;
    readonly label: string;
  };
  readonly base: ForecastPayload;
  readonly scenario: ForecastPayload;
}

export interface ServiceError {
  readonly error: string;            // "validation" | "not_found" | ...
  readonly fields?: Record<string, string>;
  readonly detail?: string;
}
