import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { BASE_COLOR, ScenarioView, addDays } from "../src/view.js";
import type { ScenarioForm } from "../src/view.js";
import { flush, json, scenarioResult, standardService } from "./fixtures.js";

async function readyView() {
  const svc = standardService();
  const view = new ScenarioView(new ApiClient("", svc.fetchFn));
  await view.loadUnits();
  await view.select("c0");
  return { svc, view };
}

function form(view: ScenarioView, patch: Partial<ScenarioForm> = {}): ScenarioForm {
  return { ...view.defaultForm(), ...patch };
}

describe("selection", () => {
  it("loads units and the unit's forecast, risk and analytics", async () => {
    const { view } = await readyView();
    expect(view.units.map((u) => u.id)).toEqual(["c0", "c1"]);
    expect(view.forecast?.geo_id).toBe("c0");
    expect(view.risk?.current_risk).toBe(4);
    expect(view.analytics?.not_doubling).toBe(true);
    expect(view.banner).toBeNull();
  });

  it("keeps the current unit on screen when another fails to load", async () => {
    const { view } = await readyView();
    await view.select("nowhere");
    expect(view.banner).toContain("no unit nowhere");
    expect(view.geoId).toBe("c0");
    expect(view.forecast?.geo_id).toBe("c0");
  });

  it("scales the axis per 100K from the unit population", async () => {
    const { view } = await readyView();
    expect(view.per100kFactor()).toBe(1);     // population exactly 100K
    expect(view.axisLabel()).toBe("daily cases / 100K");
  });
});

describe("scenario form defaults", () => {
  it("defaults the start date to the end of training data", async () => {
    const { view } = await readyView();
    const f = view.defaultForm();
    expect(f.from).toBe(view.forecast!.dates[view.forecast!.train_days - 1]);
    const win = view.dateWindow(f.horizon)!;
    expect(f.from >= win.lo && f.from <= win.hi).toBe(true);
  });

  it("windows the date to [train end - 7, train end + horizon]", async () => {
    const { view } = await readyView();
    const end = view.trainEnd()!;
    expect(view.dateWindow(10)).toEqual({
      lo: addDays(end, -7),
      hi: addDays(end, 10),
    });
  });
});

describe("scenario submission", () => {
  it("stores the served curve by reference, untransformed", async () => {
    const { svc, view } = await readyView();
    const ok = await view.submitScenario(form(view, { adjust: -7 }));
    expect(ok).toBe(true);
    expect(svc.posts).toEqual([{
      geo_id: "c0", adjust: -7, from: view.trainEnd(),
      horizon: view.forecast!.horizon, label: "",
    }]);
    // value-identical to what the service sent over the wire...
    expect(view.scenarios[0].result).toEqual(svc.served[0]);
    // ...and the chart draws the decoded response arrays themselves
    const stored = view.scenarios[0].result;
    expect(view.series()[1].band).toBe(stored.scenario.daily_cases);
    expect(view.series()[1].dates).toBe(stored.scenario.dates);
  });

  it("renders a deeper cut at or below a shallower one at horizon end", async () => {
    const { view } = await readyView();
    await view.submitScenario(form(view, { adjust: -7 }));
    await view.submitScenario(form(view, { adjust: -10 }));
    const [, seven, ten] = view.series();
    const last = (xs: number[]) => xs[xs.length - 1];
    expect(last(ten.band.central)).toBeLessThanOrEqual(last(seven.band.central));
  });

  it("a 0% adjustment overlays exactly the base curve", async () => {
    const { svc, view } = await readyView();
    await view.submitScenario(form(view, { adjust: 0 }));
    const res = svc.served[0];
    expect(res.scenario.daily_cases.central)
      .toEqual(res.base.daily_cases.central);
    expect(view.series()[1].band.central)
      .toEqual(res.base.daily_cases.central);
  });

  it("rejects an out-of-range adjustment without touching the network", async () => {
    const { svc, view } = await readyView();
    const ok = await view.submitScenario(form(view, { adjust: -150 }));
    expect(ok).toBe(false);
    expect(view.fieldErrors.adjust).toMatch(/between -100% and \+100%/);
    expect(svc.posts).toHaveLength(0);
    expect(view.scenarios).toHaveLength(0);
  });

  it("rejects dates outside the window and bad horizons locally", async () => {
    const { svc, view } = await readyView();
    const end = view.trainEnd()!;
    await view.submitScenario(form(view, { from: addDays(end, -30) }));
    expect(view.fieldErrors.from).toContain("between");
    await view.submitScenario(form(view, { horizon: 2.5 }));
    expect(view.fieldErrors.horizon).toContain("whole number");
    await view.submitScenario(form(view, { from: "someday" }));
    expect(view.fieldErrors.from).toBe("pick a start date");
    expect(svc.posts).toHaveLength(0);
  });

  it("field errors clear once a valid form goes through", async () => {
    const { view } = await readyView();
    await view.submitScenario(form(view, { adjust: 400 }));
    expect(view.fieldErrors.adjust).toBeTruthy();
    await view.submitScenario(form(view));
    expect(view.fieldErrors).toEqual({});
  });

  it("labels overlays from the form, falling back to the spec", async () => {
    const { view } = await readyView();
    await view.submitScenario(form(view, { label: "schools closed" }));
    await view.submitScenario(form(view, { adjust: 10 }));
    expect(view.scenarios[0].label).toBe("schools closed");
    expect(view.scenarios[1].label).toBe(`+10% from ${view.trainEnd()}`);
  });

  it("badges each overlay from its own trailing three weeks", async () => {
    const { view } = await readyView();
    // fixture curve rises linearly and sits far above the thresholds
    await view.submitScenario(form(view, { adjust: 5 }));
    expect(view.scenarios[0].risk).toBe(6);
  });
});

describe("submission ordering", () => {
  it("serializes POSTs so overlays land in submission order", async () => {
    const { svc, view } = await readyView();
    let release!: () => void;
    const gate = new Promise<void>((r) => { release = r; });
    let first = true;
    svc.onScenario(async (req) => {
      if (first) { first = false; await gate; }
      const result = scenarioResult(req, view.forecast!);
      svc.served.push(result);
      return json(result);
    });

    const pa = view.submitScenario(form(view, { adjust: -5, label: "A" }));
    const pb = view.submitScenario(form(view, { adjust: -10, label: "B" }));
    await flush();
    // the second request must wait for the first, however slow it is
    expect(svc.posts.map((p) => p.adjust)).toEqual([-5]);

    release();
    await Promise.all([pa, pb]);
    expect(svc.posts.map((p) => p.adjust)).toEqual([-5, -10]);
    expect(view.scenarios.map((s) => s.label)).toEqual(["A", "B"]);
    expect(view.series().map((s) => s.name))
      .toEqual(["base forecast", "A", "B"]);
  });
});

describe("service failures", () => {
  it("keeps existing overlays when a later request fails", async () => {
    const { svc, view } = await readyView();
    await view.submitScenario(form(view, { adjust: -5 }));
    expect(view.scenarios).toHaveLength(1);
    const kept = view.scenarios[0];

    svc.onScenario(() =>
      json({ error: "corrupt_artifact", detail: "fit artifact unreadable" }, 500));
    const ok = await view.submitScenario(form(view, { adjust: -10 }));
    expect(ok).toBe(false);
    expect(view.banner).toBe("fit artifact unreadable");
    expect(view.scenarios).toEqual([kept]);
    expect(view.series()).toHaveLength(2);
  });

  it("maps a service-side validation rejection onto the form", async () => {
    const { svc, view } = await readyView();
    svc.onScenario(() =>
      json({ error: "validation", fields: { from: "outside the window" } }, 422));
    const ok = await view.submitScenario(form(view));
    expect(ok).toBe(false);
    expect(view.fieldErrors).toEqual({ from: "outside the window" });
    expect(view.banner).toBeNull();
  });

  it("reports a failed unit listing in the banner", async () => {
    const view = new ScenarioView(new ApiClient("", () =>
      Promise.resolve(json({ error: "corrupt_artifact", detail: "boom" }, 500))));
    await view.loadUnits();
    expect(view.banner).toBe("boom");
    expect(view.units).toEqual([]);
  });

  it("asks for a unit before accepting scenarios", async () => {
    const svc = standardService();
    const view = new ScenarioView(new ApiClient("", svc.fetchFn));
    const ok = await view.submitScenario({
      adjust: -5, from: "2021-01-30", horizon: 28,
    });
    expect(ok).toBe(false);
    expect(view.banner).toBe("select a geo unit first");
    expect(svc.posts).toHaveLength(0);
  });
});

describe("series assembly", () => {
  it("puts the base band first and colors overlays from the palette", async () => {
    const { view } = await readyView();
    await view.submitScenario(form(view, { adjust: -5 }));
    await view.submitScenario(form(view, { adjust: -10 }));
    const series = view.series();
    expect(series[0].color).toBe(BASE_COLOR);
    expect(series[0].showInterval).toBe(true);
    expect(series[0].risk).toBe(4);          // service's own current rating
    expect(series[1].showInterval).toBe(false);
    expect(new Set(series.map((s) => s.color)).size).toBe(3);
  });

  it("clearing overlays resets to the base series only", async () => {
    const { view } = await readyView();
    await view.submitScenario(form(view, { adjust: -5 }));
    view.clearScenarios();
    expect(view.series()).toHaveLength(1);
    expect(view.scenarios).toEqual([]);
  });

  it("switching units drops overlays from the previous unit", async () => {
    const { view } = await readyView();
    await view.submitScenario(form(view, { adjust: -5 }));
    await view.select("c1");
    expect(view.scenarios).toEqual([]);
    expect(view.forecast?.geo_id).toBe("c1");
    expect(view.per100kFactor()).toBeCloseTo(1e5 / 250_000);
  });
});
