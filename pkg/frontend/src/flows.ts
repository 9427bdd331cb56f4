/**
 * Teach / ask / correct flows.
 *
 * Each user action maps to exactly one mutating API request, in order,
 * with no batching — a teach with three instances is still one POST.
 * After every action the metrics panel is refreshed from the server so
 * the teacher always decides their next move against current window
 * accuracy. Service errors land in an inline banner and leave the view
 * model untouched.
 */

import { ApiClient, ApiError } from "./api.js";
import type { AskResult, SessionState } from "./api.js";
import { SessionViewModel } from "./state.js";

export class TeachingConsole {
  readonly model = new SessionViewModel();
  sessionId: string | null = null;

  constructor(readonly api: ApiClient) {}

  private get sid(): string {
    if (!this.sessionId) throw new Error("no active session; call start() first");
    return this.sessionId;
  }

  async start(): Promise<string> {
    const state = await this.api.createSession();
    this.sessionId = state.id;
    this.model.applySession(state);
    await this.refreshMetrics();
    return state.id;
  }

  /** Re-sync everything from the server (e.g. after reopening the page). */
  async refresh(): Promise<void> {
    this.model.applySession(await this.api.getSession(this.sid));
    await this.refreshMetrics();
  }

  async refreshMetrics(): Promise<void> {
    this.model.applyMetrics(await this.api.getMetrics(this.sid));
  }

  async teach(label: string, instanceIds: string[]): Promise<SessionState | null> {
    try {
      const state = await this.api.teach(this.sid, label, instanceIds);
      this.model.applySession(state);
      await this.refreshMetrics();
      return state;
    } catch (err) {
      this.showError(err);
      return null;
    }
  }

  async ask(instanceId: string): Promise<AskResult | null> {
    try {
      const result = await this.api.ask(this.sid, instanceId);
      this.model.applyAsk(result);
      await this.refreshMetrics();
      return result;
    } catch (err) {
      this.showError(err);
      return null;
    }
  }

  async correct(label: string, instanceId: string): Promise<SessionState | null> {
    try {
      const state = await this.api.correct(this.sid, label, instanceId);
      this.model.applySession(state);
      await this.refreshMetrics();
      return state;
    } catch (err) {
      this.showError(err);
      return null;
    }
  }

  /**
   * Poll /metrics so the panel stays current between actions. Returns
   * a stop function; poll failures are silent (the next action will
   * surface a real error).
   */
  startMetricsPoll(intervalMs = 2000): () => void {
    const handle = setInterval(() => {
      this.refreshMetrics().catch(() => {});
    }, intervalMs);
    return () => clearInterval(handle);
  }

  private showError(err: unknown): void {
    if (!(err instanceof ApiError)) throw err;
    if (err.code === "no_knowledge") {
      this.model.setBanner("No categories yet — teach a first category to get predictions.");
    } else if (err.code === "unknown_category") {
      this.model.setBanner(`Unknown category — teach it first: ${err.message}`);
    } else {
      this.model.setBanner(`${err.code}: ${err.message}`);
    }
  }
}

export type ScriptStep =
  | { action: "teach"; label: string; instanceIds: string[] }
  | { action: "ask"; instanceId: string }
  | { action: "correct"; label: string; instanceId: string };

/** Drive a scripted session through the same flows the buttons use. */
export async function runScript(consoleCtl: TeachingConsole, steps: ScriptStep[]): Promise<void> {
  for (const step of steps) {
    if (step.action === "teach") {
      await consoleCtl.teach(step.label, step.instanceIds);
    } else if (step.action === "ask") {
      await consoleCtl.ask(step.instanceId);
    } else {
      await consoleCtl.correct(step.label, step.instanceId);
    }
  }
}
