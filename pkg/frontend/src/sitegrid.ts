// Synoptic site grid: one cell per site, the loud ones first.

import type { ApiError, SiteCell, StaleInfo } from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// Cells are ordered by open alarm count, worst first, so the operator's
// eye lands on trouble; ties settle alphabetically to keep the layout
// stable between polls.
export function orderCells(sites: SiteCell[]): SiteCell[] {
  return [...sites].sort((a, b) =>
    b.openAlarmCount - a.openAlarmCount || a.name.localeCompare(b.name));
}

function cellClass(cell: SiteCell): string {
  const classes = ["cell"];
  if (cell.openAlarmCount > 0) classes.push("hot");
  if (cell.inDowntime) classes.push("downtime");
  return classes.join(" ");
}

export function renderSiteCell(cell: SiteCell): string {
  const name = escapeHtml(cell.name);
  return `<div class="${cellClass(cell)}" data-site="${name}"` +
    ` onclick="selectSite('${name}')">` +
    `<span class="site-name">${name}</span>` +
    `<span class="counts">` +
    `<b class="alarm-count">${cell.openAlarmCount}</b> alarms / ` +
    `<b class="ticket-count">${cell.openTicketCount}</b> tickets` +
    `</span>` +
    (cell.inDowntime ? `<span class="downtime-tag">downtime</span>` : "") +
    `</div>`;
}

export function renderStaleBadge(stale: StaleInfo): string {
  const when = stale.generatedAt === null
    ? "unknown time" : `t=${stale.generatedAt.toFixed(3)}`;
  return `<span class="stale-badge" title="${escapeHtml(stale.code)}">` +
    `stale data from ${when}</span>`;
}

export function renderFetchError(error: ApiError): string {
  return `<div class="fetch-error">` +
    `<code class="error-code">${escapeHtml(error.code)}</code> ` +
    `${escapeHtml(error.message)} ` +
    `<button class="retry" onclick="refreshGrid()">retry</button>` +
    `</div>`;
}

export function renderSiteGrid(sites: SiteCell[],
                               opts: { stale?: StaleInfo | null;
                                       error?: ApiError | null } = {}): string {
  const parts: string[] = [];
  if (opts.error) parts.push(renderFetchError(opts.error));
  if (opts.stale) parts.push(renderStaleBadge(opts.stale));
  if (sites.length === 0) {
    parts.push(`<p class="empty">no sites registered</p>`);
  } else {
    parts.push(`<div class="site-grid">` +
      orderCells(sites).map(renderSiteCell).join("") + `</div>`);
  }
  return parts.join("\n");
}
