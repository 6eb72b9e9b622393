import { ApiClient } from "./api.js";
import { chartSvg } from "./chart.js";
import { ScenarioView } from "./view.js";
import type { ScenarioForm } from "./view.js";

/** Page wiring: the only module that touches the DOM.
 *
 * Everything it renders comes out of ScenarioView; every event it hears
 * is forwarded back in.  Keeping this file dumb is what lets the rest of
 * the UI run under plain Node in tests.
 */

const view = new ScenarioView(new ApiClient());

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const RISK_LABELS = ["", "1 · low", "2", "3", "4", "5", "6 · severe"];

function riskBadge(level: number | null): string {
  if (level === null) return "";
  const n = Math.min(6, Math.max(1, Math.round(level)));
  return `<span class="badge risk-${n}" title="risk level ${n} of 6">` +
    `${RISK_LABELS[n]}</span>`;
}

function fmtNum(v: number | null | undefined, digits = 2): string {
  return v === null || v === undefined ? "–" : v.toFixed(digits);
}

function escapeHtml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function readForm(): ScenarioForm {
  return {
    adjust: Number(el<HTMLInputElement>("adjust").value),
    from: el<HTMLInputElement>("from").value,
    horizon: Number(el<HTMLInputElement>("horizon").value),
    label: el<HTMLInputElement>("label").value.trim(),
  };
}

function writeForm(form: ScenarioForm): void {
  el<HTMLInputElement>("adjust").value = String(form.adjust);
  el<HTMLInputElement>("from").value = form.from;
  el<HTMLInputElement>("horizon").value = String(form.horizon);
  el<HTMLInputElement>("label").value = form.label ?? "";
  el<HTMLOutputElement>("adjust-out").textContent = `${form.adjust}%`;
}

function render(): void {
  const banner = el("banner");
  banner.textContent = view.banner ?? "";
  banner.hidden = view.banner === null;

  const meta = el("unit-meta");
  const pop = view.population();
  meta.textContent = pop ? `population ${pop.toLocaleString("en-US")}` : "";

  const a = view.analytics;
  el("analytics").innerHTML = !a ? "" : [
    `<dt>R<sub>0</sub></dt><dd>${fmtNum(a.r0)}</dd>`,
    `<dt>R<sub>t</sub></dt><dd>${fmtNum(a.r_t)}</dd>`,
    `<dt>growth / day</dt><dd>${fmtNum(a.growth_rate, 3)}</dd>`,
    `<dt>doubling</dt><dd>${
      a.not_doubling ? "not doubling" : `${fmtNum(a.doubling_time, 1)} d`
    }</dd>`,
  ].join("");

  const risk = el("risk-strip");
  if (view.risk) {
    const ahead = view.risk.projected_risks
      .map((r, i) => `<span class="proj" title="week ${i + 1} ahead">${r}</span>`)
      .join("");
    risk.innerHTML = `now ${riskBadge(view.risk.current_risk)}` +
      (ahead ? `<span class="proj-label">ahead</span>${ahead}` : "");
  } else {
    risk.innerHTML = "";
  }

  const factor = view.per100kFactor();
  const series = view.series();
  el("cases-chart").innerHTML = chartSvg(series, {
    yFactor: factor,
    yLabel: view.axisLabel(),
    trainEnd: view.trainEnd(),
  });
  el("deaths-chart").innerHTML = chartSvg(view.deathSeries(), {
    yFactor: factor,
    yLabel: view.population() ? "cumulative deaths / 100K" : "cumulative deaths",
    trainEnd: view.trainEnd(),
  });

  el("legend").innerHTML = series.map((s) =>
    `<li><span class="swatch" style="background:${s.color}"></span>` +
    `${escapeHtml(s.name)} ${riskBadge(s.risk)}</li>`,
  ).join("");
  el<HTMLButtonElement>("clear").disabled = view.scenarios.length === 0;

  for (const field of ["adjust", "from", "horizon"]) {
    const slot = el(`err-${field}`);
    slot.textContent = view.fieldErrors[field] ?? "";
  }

  const win = view.dateWindow(readForm().horizon || 1);
  const fromInput = el<HTMLInputElement>("from");
  fromInput.min = win?.lo ?? "";
  fromInput.max = win?.hi ?? "";

  document.body.classList.toggle("loading", view.loading);
}

async function selectUnit(geoId: string): Promise<void> {
  await view.select(geoId);
  if (view.forecast) writeForm(view.defaultForm());
  render();
}

async function main(): Promise<void> {
  await view.loadUnits();
  const select = el<HTMLSelectElement>("unit-select");
  select.innerHTML = view.units
    .map((u) => `<option value="${escapeHtml(u.id)}">${escapeHtml(u.id)}</option>`)
    .join("");

  select.addEventListener("change", () => void selectUnit(select.value));

  el<HTMLInputElement>("adjust").addEventListener("input", () => {
    el<HTMLOutputElement>("adjust-out").textContent =
      `${el<HTMLInputElement>("adjust").value}%`;
  });

  el<HTMLFormElement>("scenario-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    void view.submitScenario(readForm()).then(render);
    render();  // show validation feedback immediately
  });

  el<HTMLButtonElement>("clear").addEventListener("click", () => {
    view.clearScenarios();
    render();
  });

  if (view.units.length > 0) {
    select.value = view.units[0].id;
    await selectUnit(view.units[0].id);
  } else {
    render();
  }
}

void main();
