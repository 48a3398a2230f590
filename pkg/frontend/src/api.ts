/**
 * Typed client for the footfall HTTP API.
 *
 * Every number the dashboard shows comes out of these responses untouched;
 * the UI never derives traffic or conversion values itself.
 */

export interface DailyRecord {
  date: string;
  people_counted: number;
  traffic: number;
  unpaired: number;
  transactions: number | null;
  conversion_rate_percent: number | null;
}

export interface LiveStatus {
  date: string | null;
  active_tracks: number;
  people_counted_so_far: number;
  traffic_so_far: number;
  last_frame_timestamp_ms: number | null;
}

export interface TrendPoint {
  date: string;
  traffic_avg: number;
  conversion_avg: number | null;
}

export interface HourlyHistogram {
  date: string;
  buckets: number[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly base = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, `network error: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  live(): Promise<LiveStatus> {
    return this.request<LiveStatus>("/api/live");
  }

  days(from?: string, to?: string): Promise<DailyRecord[]> {
    const query = new URLSearchParams();
    if (from) query.set("from", from);
    if (to) query.set("to", to);
    const qs = query.toString();
    return this.request<DailyRecord[]>(`/api/days${qs ? `?${qs}` : ""}`);
  }

  hourly(date: string): Promise<HourlyHistogram> {
    return this.request<HourlyHistogram>(`/api/days/${date}/hourly`);
  }

  trend(window: number): Promise<TrendPoint[]> {
    return this.request<TrendPoint[]>(`/api/trend?window=${window}`);
  }

  setTransactions(date: string, count: number): Promise<DailyRecord> {
    return this.request<DailyRecord>(`/api/days/${date}/transactions`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ count }),
    });
  }
}
