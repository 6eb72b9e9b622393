import type { Thresholds } from "./types.js";

/** Community risk rating on a 1 (safest) .. 6 scale from three consecutive
 * weekly averages of daily cases per 100K, `a3` the most recent week.
 *
 * This mirrors the service's scoring rules so scenario overlays can carry a
 * badge; the base unit's badge always comes from the service verbatim, so
 * any drift here would show up as a badge mismatch on the 0% scenario.
 */
export function riskScore(
  a1: number,
  a2: number,
  a3: number,
  th: Thresholds,
): number {
  if (Math.min(a1, a2, a3) < 0) {
    throw new Error("weekly averages must be non-negative");
  }
  const strictDecr = a3 < a2 && a2 < a1;
  const strictIncr = a3 > a2 && a2 > a1;
  if (a1 < th.kappa && a2 < th.kappa && a3 < th.kappa) {
    if (a2 < th.lambda && a3 < th.lambda) {
      const flat =
        Math.abs(a3 - a2) <= th.tau &&
        Math.abs(a2 - a1) <= th.tau &&
        Math.abs(a3 - a1) <= th.tau;
      const flatDecr = Math.abs(a2 - a1) <= th.tau && a3 < a2;
      return flat || strictDecr || flatDecr ? 1 : 2;
    }
    return strictDecr ? 2 : 3;
  }
  if (strictDecr) return 4;
  if (strictIncr) return 6;
  return 5;
}

/** Score the trailing three weeks of a daily series (values per 100K). */
export function trailingRisk(
  dailyPer100k: number[],
  th: Thresholds,
): number | null {
  if (dailyPer100k.length < 21) return null;
  const tail = dailyPer100k.slice(-21);
  const mean = (xs: number[]) => xs.reduce((s, v) => s + v, 0) / xs.length;
  return riskScore(
    mean(tail.slice(0, 7)),
    mean(tail.slice(7, 14)),
    mean(tail.slice(14)),
    th,
  );
}
