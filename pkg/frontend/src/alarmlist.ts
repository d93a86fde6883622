// Alarm triage: the list, the action buttons and the round trip that
// keeps them honest. Every action POSTs, then refetches the list so the
// table always shows what the server decided, not what we hoped.

import { GridOpsClient, asApiError } from "./client.js";
import { escapeHtml } from "./sitegrid.js";
import { parseAlarmList } from "./viewmodel.js";
import type { AlarmRow, ApiError } from "./types.js";

// Which buttons make sense per status; the server still has the final
// say (an out-of-date row just earns an ILLEGAL_TRANSITION banner).
const ACTIONS_BY_STATUS: Record<string, string[]> = {
  NEW: ["assign", "mask", "set-off"],
  ASSIGNED: ["close"],
  MASKED: ["unmask"],
  OFF: ["close"],
  CLOSED: [],
};

export function actionsFor(status: string): string[] {
  return ACTIONS_BY_STATUS[status] ?? [];
}

function buttons(alarm: AlarmRow): string {
  return actionsFor(alarm.status).map((action) =>
    `<button class="act" onclick="alarmAction('${escapeHtml(alarm.id)}',` +
    `'${action}')">${action}</button>`).join(" ");
}

export function renderAlarmRow(alarm: AlarmRow): string {
  const ticket = alarm.ticketId
    ? `<a class="ticket-link" href="#ticket-${escapeHtml(alarm.ticketId)}">` +
      `${escapeHtml(alarm.ticketId)}</a>`
    : "";
  const masked = alarm.maskedBy
    ? `<span class="masked-by">masked by ${escapeHtml(alarm.maskedBy)}</span>`
    : "";
  return `<tr class="alarm status-${alarm.status}" data-alarm="${escapeHtml(alarm.id)}">` +
    `<td>${escapeHtml(alarm.id)}</td>` +
    `<td>${escapeHtml(alarm.site)}</td>` +
    `<td>${escapeHtml(alarm.node)}</td>` +
    `<td>${escapeHtml(alarm.test)}</td>` +
    `<td class="status">${alarm.status}${masked ? " " + masked : ""}</td>` +
    `<td>${escapeHtml(alarm.assignee)}</td>` +
    `<td>${ticket}</td>` +
    `<td>${buttons(alarm)}</td>` +
    `</tr>`;
}

export function renderAlarmTable(rows: AlarmRow[],
                                 filter?: string): string {
  const shown = filter ? rows.filter((r) => r.status === filter) : rows;
  if (shown.length === 0) {
    return `<p class="empty">no alarms${filter ? ` in ${filter}` : ""}</p>`;
  }
  return `<table class="alarms"><thead><tr>` +
    `<th>id</th><th>site</th><th>node</th><th>test</th><th>status</th>` +
    `<th>assignee</th><th>ticket</th><th>actions</th>` +
    `</tr></thead><tbody>` +
    shown.map(renderAlarmRow).join("") +
    `</tbody></table>`;
}

// Rejected actions show the backend's error code verbatim; a 403 gets
// its own wording so operators know it's their role, not the alarm.
export function renderErrorBanner(error: ApiError): string {
  if (error.status === 403) {
    return `<div class="banner forbidden">insufficient role: ` +
      `${escapeHtml(error.message)}</div>`;
  }
  return `<div class="banner error">` +
    `<code class="error-code">${escapeHtml(error.code)}</code> ` +
    `${escapeHtml(error.message)}</div>`;
}

export interface ActionOutcome {
  rows: AlarmRow[];
  error: ApiError | null;
}

// POST the transition, then refetch the list either way. The returned
// rows are the server's current truth; the error, when present, is
// rendered but never applied to local state.
export async function alarmAction(
  client: GridOpsClient, alarmId: string, action: string,
  opts: { assignee?: string; master?: string; note?: string;
          site?: string; includeMasked?: boolean } = {},
): Promise<ActionOutcome> {
  let error: ApiError | null = null;
  try {
    await client.transitionAlarm(alarmId, action, {
      assignee: opts.assignee, master: opts.master, note: opts.note,
    });
  } catch (err) {
    error = asApiError(err);
  }
  const listing = await client.listAlarms({
    site: opts.site, includeMasked: opts.includeMasked,
  });
  return { rows: parseAlarmList(listing), error };
}
