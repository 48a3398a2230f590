/**
 * Pure DOM rendering. These functions format and place API values; they do
 * no arithmetic on traffic or conversion numbers (the API is the single
 * source of truth for every derived figure).
 */

import type { DailyRecord, HourlyHistogram, LiveStatus, TrendPoint } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export function formatPercent(value: number | null): string {
  return value === null ? "—" : `${value.toFixed(2)}%`;
}

export function formatCount(value: number | null): string {
  return value === null ? "—" : String(value);
}

export function renderBanner(el: HTMLElement, message: string | null): void {
  el.textContent = message ?? "";
  el.classList.toggle("hidden", message === null);
}

export function renderLive(el: HTMLElement, status: LiveStatus | null, stale: boolean): void {
  if (status === null) {
    el.innerHTML = `<div class="empty">no live data</div>`;
    return;
  }
  const staleBadge = stale ? `<span class="badge stale">stale</span>` : "";
  el.innerHTML = `
    <div class="live-row">
      <span class="live-date">${status.date ?? "—"}</span>${staleBadge}
    </div>
    <div class="stats">
      <div class="stat"><b data-field="people">${status.people_counted_so_far}</b><span>crossings</span></div>
      <div class="stat"><b data-field="traffic">${status.traffic_so_far}</b><span>visitors</span></div>
      <div class="stat"><b data-field="active">${status.active_tracks}</b><span>in view</span></div>
    </div>`;
}

export function dailyRowHtml(record: DailyRecord): string {
  return `
    <td>${record.date}</td>
    <td data-col="people_counted">${record.people_counted}</td>
    <td data-col="traffic">${record.traffic}</td>
    <td data-col="unpaired">${record.unpaired}</td>
    <td data-col="transactions">${formatCount(record.transactions)}</td>
    <td data-col="conversion">${formatPercent(record.conversion_rate_percent)}</td>`;
}

export function renderDailyTable(el: HTMLElement, records: DailyRecord[]): void {
  if (records.length === 0) {
    el.innerHTML = `<div class="empty">no days recorded yet</div>`;
    return;
  }
  const sorted = [...records].sort((a, b) => (a.date < b.date ? -1 : a.date > b.date ? 1 : 0));
  const rows = sorted
    .map((r) => `<tr data-date="${r.date}">${dailyRowHtml(r)}</tr>`)
    .join("");
  el.innerHTML = `
    <table class="daily">
      <thead><tr>
        <th>date</th><th>crossings</th><th>visitors</th><th>unpaired</th>
        <th>transactions</th><th>conversion</th>
      </tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function updateDailyRow(el: HTMLElement, record: DailyRecord): boolean {
  const row = el.querySelector<HTMLTableRowElement>(`tr[data-date="${record.date}"]`);
  if (!row) return false;
  row.innerHTML = dailyRowHtml(record);
  return true;
}

export function renderTrend(el: HTMLElement, points: TrendPoint[]): void {
  if (points.length === 0) {
    el.innerHTML = `<div class="empty">no trend yet</div>`;
    return;
  }
  const width = 560;
  const height = 120;
  const maxTraffic = Math.max(1, ...points.map((p) => p.traffic_avg));
  const step = points.length > 1 ? width / (points.length - 1) : 0;

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "trend-chart");

  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("class", "trend-traffic");
  line.setAttribute(
    "points",
    points
      .map((p, i) => `${(i * step).toFixed(1)},${(height - (p.traffic_avg / maxTraffic) * (height - 10)).toFixed(1)}`)
      .join(" "),
  );
  svg.appendChild(line);

  // one marker per point carrying the API values verbatim
  points.forEach((p, i) => {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("class", "trend-point");
    dot.setAttribute("r", "3");
    dot.setAttribute("cx", (i * step).toFixed(1));
    dot.setAttribute("cy", (height - (p.traffic_avg / maxTraffic) * (height - 10)).toFixed(1));
    dot.setAttribute("data-date", p.date);
    dot.setAttribute("data-traffic-avg", String(p.traffic_avg));
    dot.setAttribute(
      "data-conversion-avg",
      p.conversion_avg === null ? "" : String(p.conversion_avg),
    );
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${p.date}: traffic ${p.traffic_avg}, conversion ${
      p.conversion_avg === null ? "—" : p.conversion_avg
    }`;
    dot.appendChild(title);
    svg.appendChild(dot);
  });

  el.replaceChildren(svg);
}

export function renderPeakHours(el: HTMLElement, histogram: HourlyHistogram | null): void {
  if (histogram === null) {
    el.innerHTML = `<div class="empty">no hourly data</div>`;
    return;
  }
  const max = Math.max(...histogram.buckets);
  const peak = max > 0 ? histogram.buckets.indexOf(max) : -1;
  const bars = histogram.buckets
    .map((count, hour) => {
      const pctHeight = max > 0 ? (count / max) * 100 : 0;
      const cls = hour === peak ? "bar peak" : "bar";
      return `
        <div class="hour" data-hour="${hour}" data-count="${count}" title="${hour}:00 – ${count}">
          <div class="${cls}" style="height:${pctHeight.toFixed(0)}%"></div>
          <span class="hour-label">${hour}</span>
        </div>`;
    })
    .join("");
  el.innerHTML = `<div class="hours" data-date="${histogram.date}">${bars}</div>`;
}
