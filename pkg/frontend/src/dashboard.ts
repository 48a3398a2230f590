/**
 * Dashboard controller: owns the layout, polls the API, and re-renders
 * panels from responses. One in-flight request per panel; no optimistic
 * updates (a row changes only after the server confirms).
 */

import { ApiClient, ApiError, type FetchLike, type LiveStatus } from "./api.js";
import {
  renderBanner,
  renderDailyTable,
  renderLive,
  renderPeakHours,
  renderTrend,
  updateDailyRow,
} from "./render.js";

export interface DashboardOptions {
  pollMs?: number;
  staleAfterMs?: number;
  trendWindow?: number;
  fetchFn?: FetchLike;
  now?: () => number;
}

const LAYOUT = `
  <div id="banner" class="banner hidden"></div>
  <div class="panel">
    <h2>live</h2>
    <div id="live"></div>
  </div>
  <div class="panel">
    <h2>enter transactions</h2>
    <form id="tx-form">
      <input id="tx-date" name="date" type="date" required>
      <input id="tx-count" name="count" type="text" inputmode="numeric" placeholder="count" required>
      <button type="submit">save</button>
      <span id="tx-error" class="inline-error hidden"></span>
    </form>
  </div>
  <div class="panel">
    <h2>daily records</h2>
    <div id="daily"></div>
  </div>
  <div class="panel">
    <h2>trend</h2>
    <div id="trend"></div>
  </div>
  <div class="panel">
    <h2>peak hours</h2>
    <div id="peak"></div>
  </div>`;

export class Dashboard {
  readonly client: ApiClient;
  private readonly pollMs: number;
  private readonly staleAfterMs: number;
  private readonly trendWindow: number;
  private readonly now: () => number;
  private lastLiveOk: number | null = null;
  private lastStatus: LiveStatus | null = null;
  private liveInFlight = false;
  private dailyInFlight = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly root: HTMLElement,
    options: DashboardOptions = {},
  ) {
    this.client = new ApiClient("", options.fetchFn);
    this.pollMs = options.pollMs ?? 2000;
    this.staleAfterMs = options.staleAfterMs ?? this.pollMs * 3;
    this.trendWindow = options.trendWindow ?? 7;
    this.now = options.now ?? (() => Date.now());
  }

  mount(): void {
    this.root.innerHTML = LAYOUT;
    const form = this.el<HTMLFormElement>("tx-form");
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitTransactions();
    });
  }

  start(): void {
    if (this.timer === null) {
      this.timer = setInterval(() => void this.refreshLive(), this.pollMs);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private el<T extends HTMLElement>(id: string): T {
    const found = this.root.querySelector<T>(`#${id}`);
    if (!found) throw new Error(`missing element #${id}`);
    return found;
  }

  private showError(message: string): void {
    renderBanner(this.el("banner"), message);
  }

  private clearError(): void {
    renderBanner(this.el("banner"), null);
  }

  async refreshLive(): Promise<void> {
    if (this.liveInFlight) return;
    this.liveInFlight = true;
    try {
      const status = await this.client.live();
      this.lastLiveOk = this.now();
      this.lastStatus = status;
      renderLive(this.el("live"), status, false);
      this.clearError();
    } catch (err) {
      const stale =
        this.lastLiveOk === null || this.now() - this.lastLiveOk > this.staleAfterMs;
      if (stale) {
        renderLive(this.el("live"), this.lastStatus, true);
      }
      this.showError(err instanceof ApiError ? err.message : String(err));
    } finally {
      this.liveInFlight = false;
    }
  }

  async refreshDaily(): Promise<void> {
    if (this.dailyInFlight) return;
    this.dailyInFlight = true;
    try {
      const records = await this.client.days();
      renderDailyTable(this.el("daily"), records);
      const points = await this.client.trend(this.trendWindow);
      renderTrend(this.el("trend"), points);
      const latest = records.reduce<(typeof records)[number] | undefined>(
        (acc, r) => (!acc || r.date > acc.date ? r : acc),
        undefined,
      );
      if (latest) {
        renderPeakHours(this.el("peak"), await this.client.hourly(latest.date));
        const dateInput = this.el<HTMLInputElement>("tx-date");
        if (!dateInput.value) dateInput.value = latest.date;
      } else {
        renderPeakHours(this.el("peak"), null);
      }
      this.clearError();
    } catch (err) {
      this.showError(err instanceof ApiError ? err.message : String(err));
    } finally {
      this.dailyInFlight = false;
    }
  }

  /** Validate the form, PUT the count, and re-render the row from the response. */
  async submitTransactions(): Promise<void> {
    const dateInput = this.el<HTMLInputElement>("tx-date");
    const countInput = this.el<HTMLInputElement>("tx-count");
    const inlineError = this.el("tx-error");

    const date = dateInput.value;
    const raw = countInput.value.trim();
    if (!date) {
      this.inlineError(inlineError, "choose a date");
      return;
    }
    if (!/^\d+$/.test(raw)) {
      this.inlineError(inlineError, "count must be a non-negative integer");
      return;
    }
    this.inlineError(inlineError, null);

    try {
      const record = await this.client.setTransactions(date, Number(raw));
      if (!updateDailyRow(this.el("daily"), record)) {
        await this.refreshDaily();
      } else {
        renderTrend(this.el("trend"), await this.client.trend(this.trendWindow));
      }
      this.clearError();
    } catch (err) {
      // surface the server's words, per contract
      this.showError(err instanceof ApiError ? err.message : String(err));
    }
  }

  private inlineError(el: HTMLElement, message: string | null): void {
    el.textContent = message ?? "";
    el.classList.toggle("hidden", message === null);
  }
}
