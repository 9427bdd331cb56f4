import { describe, expect, it } from "vitest";

import type { AskResult, Metrics, SessionState } from "../src/api.js";
import { scoreBars, SessionViewModel } from "../src/state.js";

const makeState = (overrides: Partial<SessionState> = {}): SessionState => ({
  id: "s-1",
  categories: { mug: 2, bowl: 1 },
  n_total: 3,
  d: 1024,
  window_accuracy: 0.5,
  last_prediction: null,
  kb_digest: "f".repeat(64),
  events: [],
  ...overrides,
});

const makeMetrics = (): Metrics => ({
  qci: 5,
  alc: 2,
  aic: 2.5,
  gca: 0.2,
  apa: 0.35,
  window_accuracy: 0.5,
});

describe("session view model", () => {
  it("mirrors the latest session payload verbatim", () => {
    const model = new SessionViewModel();
    const state = makeState();
    model.applySession(state);
    expect(model.session).toBe(state);
  });

  it("ask results replace both the prediction and the session", () => {
    const model = new SessionViewModel();
    model.applySession(makeState());
    const after = makeState({ n_total: 4, kb_digest: "a".repeat(64) });
    const ask: AskResult = {
      prediction: { instance_id: "box_0", label: "mug", log_scores: { mug: -3, bowl: -4 } },
      true_label: "box",
      correct: false,
      window_accuracy: 0.25,
      session: after,
    };
    model.applyAsk(ask);
    expect(model.lastAsk).toBe(ask);
    expect(model.session).toBe(after);
  });

  it("lists categories alphabetically with their counts", () => {
    const model = new SessionViewModel();
    model.applySession(makeState());
    expect(model.categoryRows()).toEqual([
      { label: "bowl", count: 1 },
      { label: "mug", count: 2 },
    ]);
  });

  it("renders metric panels with the server's values untouched", () => {
    const model = new SessionViewModel();
    const metrics = makeMetrics();
    model.applyMetrics(metrics);
    const panels = model.metricPanels();
    // Rebuilding the payload from the panels must give it back exactly:
    // the console does no metric math of its own.
    expect(Object.fromEntries(panels.map((p) => [p.key, p.value]))).toEqual(metrics);
    for (const panel of panels) {
      expect(panel.title.length).toBeGreaterThan(0);
      expect(panel.value).toBe(metrics[panel.key]);
    }
  });

  it("shows nothing before the first server responses", () => {
    const model = new SessionViewModel();
    expect(model.session).toBeNull();
    expect(model.categoryRows()).toEqual([]);
    expect(model.metricPanels()).toEqual([]);
    expect(model.logScoreBars()).toEqual([]);
  });

  it("clears the error banner on the next successful payload", () => {
    const model = new SessionViewModel();
    model.setBanner("service unreachable");
    expect(model.banner).toBe("service unreachable");
    model.applySession(makeState());
    expect(model.banner).toBeNull();
  });
});

describe("log-score bars", () => {
  it("orders bars by score and normalizes shares to one", () => {
    const bars = scoreBars({
      instance_id: "box_0",
      label: "mug",
      log_scores: { bowl: -2, mug: -1, plate: -5 },
    });
    expect(bars.map((b) => b.label)).toEqual(["mug", "bowl", "plate"]);
    const total = bars.reduce((acc, b) => acc + b.share, 0);
    expect(total).toBeCloseTo(1, 12);
    expect(bars[0].share).toBeGreaterThan(bars[1].share);
  });

  it("converts log-score gaps into logistic shares", () => {
    const bars = scoreBars({
      instance_id: "x",
      label: "a",
      log_scores: { a: -1, b: -2 },
    });
    // Two categories one nat apart: shares 1/(1+e^-1) and its complement.
    expect(bars[0].share).toBeCloseTo(1 / (1 + Math.exp(-1)), 12);
    expect(bars[1].share).toBeCloseTo(1 - bars[0].share, 12);
  });

  it("breaks exact ties alphabetically", () => {
    const bars = scoreBars({
      instance_id: "x",
      label: "a",
      log_scores: { b: -1.5, a: -1.5 },
    });
    expect(bars.map((b) => b.label)).toEqual(["a", "b"]);
    expect(bars[0].share).toBeCloseTo(0.5, 12);
  });

  it("reads the prediction from the mirrored session", () => {
    const model = new SessionViewModel();
    model.applySession(
      makeState({
        last_prediction: { instance_id: "box_1", label: "mug", log_scores: { mug: -0.5 } },
      }),
    );
    const bars = model.logScoreBars();
    expect(bars).toHaveLength(1);
    expect(bars[0].share).toBeCloseTo(1, 12);
  });
});
