/** Pure view-model layer: turns service responses into render-ready data.
 * No DOM access here, so all of it is unit-testable against mocks. */

import type { ScoreResponse, WhatIfPoint } from "./api.js";

export const DISPLAY_DECIMALS = 3;

export interface GaugeView {
  /** probability as a fraction of the dial, in [0, 1] */
  fraction: number;
  /** probability rendered to display precision, e.g. "0.980" */
  text: string;
  /** fixed marker position for the decision threshold */
  thresholdFraction: number;
}

export interface BadgeView {
  outcome: "death" | "survival";
  label: string;
  /** css hook: "danger" | "ok" */
  tone: "danger" | "ok";
}

export interface ScoreView {
  gauge: GaugeView;
  badge: BadgeView;
  logOddsText: string;
  modelVersion: string;
}

export function formatProbability(p: number): string {
  return p.toFixed(DISPLAY_DECIMALS);
}

/** The badge restates the service's call; the strict ">" check below exists
 * only to keep gauge and badge consistent if they ever disagree, in which
 * case the probability (single source of truth) wins. */
export function badgeFor(probability: number, threshold: number): BadgeView {
  const death = probability > threshold;
  return {
    outcome: death ? "death" : "survival",
    label: death ? "high risk" : "low risk",
    tone: death ? "danger" : "ok",
  };
}

export function scoreView(resp: ScoreResponse): ScoreView {
  return {
    gauge: {
      fraction: Math.min(1, Math.max(0, resp.probability)),
      text: formatProbability(resp.probability),
      thresholdFraction: resp.threshold,
    },
    badge: badgeFor(resp.probability, resp.threshold),
    logOddsText: resp.log_odds.toFixed(DISPLAY_DECIMALS),
    modelVersion: resp.model_version,
  };
}

export interface WhatIfView {
  points: WhatIfPoint[];
  /** curve point nearest the slider's current value, for the marker */
  marker: WhatIfPoint | null;
  thresholdFraction: number;
  /** biomarker value where the curve crosses the threshold, if it does */
  crossing: number | null;
}

export function whatIfView(
  points: WhatIfPoint[],
  currentValue: number,
  threshold: number,
): WhatIfView {
  let marker: WhatIfPoint | null = null;
  for (const pt of points) {
    if (
      marker === null ||
      Math.abs(pt.value - currentValue) < Math.abs(marker.value - currentValue)
    ) {
      marker = pt;
    }
  }
  let crossing: number | null = null;
  for (let i = 1; i < points.length; i++) {
    const a = points[i - 1];
    const b = points[i];
    const sideA = a.probability > threshold;
    const sideB = b.probability > threshold;
    if (sideA !== sideB) {
      const t = (threshold - a.probability) / (b.probability - a.probability);
      crossing = a.value + t * (b.value - a.value);
      break;
    }
  }
  return { points, marker, thresholdFraction: threshold, crossing };
}

/** Serializes async lookups so only the newest one lands (latest-wins).
 * Superseded calls resolve to null instead of overwriting fresh state. */
export class LatestWins {
  private token = 0;

  async run<T>(task: () => Promise<T>): Promise<T | null> {
    const mine = ++this.token;
    const result = await task();
    return mine === this.token ? result : null;
  }
}

/** Trailing-edge debounce; the returned function delays `fn` by `ms` and
 * drops earlier pending invocations. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  ms: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => fn(...args), ms);
  };
}
