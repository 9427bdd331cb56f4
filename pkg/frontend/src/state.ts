/**
 * Session view model: the console's picture of one teaching session.
 *
 * The model is a mirror, not a ledger. It stores the latest server
 * payloads verbatim and re-derives nothing — window accuracy, the five
 * metrics, category counts and the last prediction are all shown exactly
 * as the service reported them, so closing and reopening the console
 * against the same session always shows the same numbers.
 */

import type { AskResult, Metrics, Prediction, SessionState } from "./api.js";

export interface CategoryRow {
  label: string;
  count: number;
}

export interface MetricPanel {
  key: keyof Metrics;
  title: string;
  value: number | null;
}

export interface ScoreBar {
  label: string;
  logScore: number;
  /** Relative bar width in (0, 1]; softmax share of the posterior mass. */
  share: number;
}

const METRIC_TITLES: [keyof Metrics, string][] = [
  ["qci", "Question/correction iterations"],
  ["alc", "Average learned categories"],
  ["aic", "Instances per category"],
  ["gca", "Global accuracy"],
  ["apa", "Average protocol accuracy"],
  ["window_accuracy", "Window accuracy"],
];

export class SessionViewModel {
  session: SessionState | null = null;
  metrics: Metrics | null = null;
  lastAsk: AskResult | null = null;
  banner: string | null = null;

  applySession(state: SessionState): void {
    this.session = state;
    this.banner = null;
  }

  applyAsk(result: AskResult): void {
    this.lastAsk = result;
    this.session = result.session;
    this.banner = null;
  }

  applyMetrics(metrics: Metrics): void {
    this.metrics = metrics;
  }

  setBanner(message: string): void {
    this.banner = message;
  }

  categoryRows(): CategoryRow[] {
    if (!this.session) return [];
    return Object.keys(this.session.categories)
      .sort()
      .map((label) => ({ label, count: this.session!.categories[label] }));
  }

  /** Metric panels carry the server's values untouched. */
  metricPanels(): MetricPanel[] {
    if (!this.metrics) return [];
    const m = this.metrics;
    return METRIC_TITLES.map(([key, title]) => ({ key, title, value: m[key] }));
  }

  /**
   * Per-category bars for the last prediction, widest first. Widths are
   * a softmax over the log scores — presentation only, the winning label
   * is still whatever the server said.
   */
  logScoreBars(): ScoreBar[] {
    const prediction = this.session?.last_prediction ?? null;
    if (!prediction) return [];
    return scoreBars(prediction);
  }
}

export function scoreBars(prediction: Prediction): ScoreBar[] {
  const entries = Object.entries(prediction.log_scores);
  const top = Math.max(...entries.map(([, s]) => s));
  const exps = entries.map(([label, s]) => ({ label, logScore: s, raw: Math.exp(s - top) }));
  const total = exps.reduce((acc, e) => acc + e.raw, 0);
  return exps
    .map(({ label, logScore, raw }) => ({ label, logScore, share: raw / total }))
    .sort((a, b) => b.logScore - a.logScore || a.label.localeCompare(b.label));
}
