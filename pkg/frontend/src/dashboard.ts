// Live feedback panel. Every displayed number comes from a server snapshot;
// the only arithmetic done here is plotting the reference line 4(1-2l) that
// the session point is judged against.

import type { Snapshot } from "./types.js";

const PLOT_W = 360;
const PLOT_H = 220;
const MARGIN = 36;
const L_MAX = 0.25;
const BOUND_MIN = 2.0;
const BOUND_MAX = 4.0;

export function jcLine(l: number): number {
  return 4 * (1 - 2 * l);
}

function toX(l: number): number {
  return MARGIN + (l / L_MAX) * (PLOT_W - 2 * MARGIN);
}

function toY(bound: number): number {
  const t = (bound - BOUND_MIN) / (BOUND_MAX - BOUND_MIN);
  return PLOT_H - MARGIN - t * (PLOT_H - 2 * MARGIN);
}

function fmt(value: number | null | undefined, digits = 4): string {
  return value === null || value === undefined ? "--" : value.toFixed(digits);
}

export function predictabilityHint(score: number | null): string {
  if (score === null) return "keep typing; the predictor needs more input";
  const pct = Math.round(score * 100);
  if (pct >= 70) return `you are ${pct}% predictable - vary your rhythm`;
  if (pct >= 55) return `you are ${pct}% predictable - a machine sees some pattern`;
  return `you are ${pct}% predictable - nicely erratic`;
}

export class Dashboard {
  private maxTrials = 0;

  constructor(private readonly root: HTMLElement) {
    this.root.innerHTML = `
      <dl class="stats">
        <dt>trials</dt><dd data-field="trials">0</dd>
        <dt>coincidences</dt><dd data-field="coincidences">0</dd>
        <dt>accepted bits</dt><dd data-field="accepted">0</dd>
        <dt>CHSH S</dt><dd data-field="s">--</dd>
        <dt>critical l (MDL)</dt><dd data-field="l">--</dd>
        <dt>predictability</dt><dd data-field="predictability">--</dd>
      </dl>
      <p class="hint" data-field="hint"></p>
      <svg class="bound-plot" viewBox="0 0 ${PLOT_W} ${PLOT_H}" role="img"
           aria-label="classical bound versus measurement dependence"></svg>
      <p class="plot-caption">classical bound 4(1&#8722;2l) with the session's point</p>
    `;
    this.drawPlot(null);
  }

  private field(name: string): HTMLElement {
    return this.root.querySelector(`[data-field="${name}"]`) as HTMLElement;
  }

  /** Render a snapshot. The trial counter never goes backwards. */
  update(snapshot: Snapshot): void {
    this.maxTrials = Math.max(this.maxTrials, snapshot.trials);
    this.field("trials").textContent = String(this.maxTrials);
    this.field("coincidences").textContent = String(snapshot.coincidences);
    this.field("accepted").textContent = String(
      snapshot.accepted_bits.A + snapshot.accepted_bits.B,
    );

    const chsh = snapshot.analysis.chsh;
    if (chsh.s) {
      const sd = chsh.s.uncertainty_stddev;
      this.field("s").textContent =
        fmt(chsh.s.value) + (sd === null ? "" : ` ± ${fmt(sd)}`);
    } else {
      this.field("s").textContent = "--";
    }

    const mdl = snapshot.analysis.mdl;
    let point: number | null = null;
    if (mdl.critical_l) {
      const sd = mdl.critical_l.uncertainty_stddev;
      this.field("l").textContent =
        fmt(mdl.critical_l.value) + (sd === null ? "" : ` ± ${fmt(sd)}`);
      point = mdl.critical_l.value;
    } else {
      this.field("l").textContent = "--";
    }

    this.field("predictability").textContent =
      snapshot.predictability === null ? "--" : fmt(snapshot.predictability, 2);
    this.field("hint").textContent = predictabilityHint(snapshot.predictability);
    this.drawPlot(point);
  }

  trialsShown(): number {
    return this.maxTrials;
  }

  private drawPlot(pointL: number | null): void {
    const svg = this.root.querySelector("svg") as SVGSVGElement;
    const steps = 50;
    const pts: string[] = [];
    for (let i = 0; i <= steps; i++) {
      const l = (i / steps) * L_MAX;
      pts.push(`${toX(l).toFixed(1)},${toY(jcLine(l)).toFixed(1)}`);
    }
    let markup = `
      <line x1="${MARGIN}" y1="${PLOT_H - MARGIN}" x2="${PLOT_W - MARGIN}"
            y2="${PLOT_H - MARGIN}" class="axis"/>
      <line x1="${MARGIN}" y1="${MARGIN}" x2="${MARGIN}"
            y2="${PLOT_H - MARGIN}" class="axis"/>
      <polyline points="${pts.join(" ")}" class="bound-line" fill="none"/>
      <text x="${PLOT_W - MARGIN}" y="${PLOT_H - 8}" text-anchor="end" class="axis-label">l</text>
      <text x="8" y="${MARGIN}" class="axis-label">bound</text>
    `;
    if (pointL !== null && pointL >= 0 && pointL <= L_MAX) {
      markup += `<circle data-role="session-point" cx="${toX(pointL).toFixed(1)}"
                  cy="${toY(jcLine(pointL)).toFixed(1)}" r="5" class="session-point"/>`;
    }
    svg.innerHTML = markup;
  }
}
