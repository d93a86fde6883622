// Pure view-model layer. Reducers take the current model plus a server
// response and return the next model; nothing here mutates alarm or
// ticket state locally, the server answer is always the truth.

import { asArray, att, text } from "./client.js";
import type {
  AlarmRow, AlarmStatus, ApiError, DashboardViewModel, PendingAction,
  SiteCell, StaleInfo, TicketRow,
} from "./types.js";

export function emptyDashboard(): DashboardViewModel {
  return {
    sites: [],
    generatedAt: null,
    selectedSite: null,
    alarmDetail: null,
    pendingAction: null,
    lastError: null,
    stale: null,
    seq: 0,
  };
}

export interface SitesOverview {
  generatedAt: number | null;
  sites: SiteCell[];
}

// GET /sites: <sites generated-at=".."><site name=".." .../></sites>
export function parseSitesOverview(doc: Record<string, any>): SitesOverview {
  const root = doc["sites"] ?? {};
  const cells = asArray(root["site"]).map((el: any): SiteCell => ({
    name: att(el, "name"),
    region: att(el, "region"),
    certification: att(el, "status"),
    nodeCount: Number(att(el, "nodes") || "0"),
    openAlarmCount: Number(att(el, "open-alarms") || "0"),
    openTicketCount: Number(att(el, "open-tickets") || "0"),
    inDowntime: att(el, "in-downtime") === "true",
  }));
  const stamp = att(root, "generated-at");
  return { generatedAt: stamp ? Number(stamp) : null, sites: cells };
}

export function parseAlarm(el: Record<string, any>): AlarmRow {
  return {
    id: att(el, "id"),
    sensor: att(el, "sensor"),
    test: att(el, "test"),
    node: att(el, "node"),
    site: att(el, "site"),
    failureTime: Number(att(el, "failure-time") || "0"),
    status: (att(el, "status") || "NEW") as AlarmStatus,
    assignee: att(el, "assignee"),
    maskedBy: att(el, "masked-by"),
    ticketId: att(el, "ticket"),
    message: text(el["message"]),
  };
}

// GET /alarms: <alarms><alarm .../></alarms>; single-alarm responses
// arrive as <alarm .../> directly.
export function parseAlarmList(doc: Record<string, any>): AlarmRow[] {
  const root = doc["alarms"] ?? {};
  return asArray(root["alarm"]).map(parseAlarm);
}

export function parseAlarmDocument(doc: Record<string, any>): AlarmRow {
  return parseAlarm(doc["alarm"] ?? {});
}

export function parseTicket(el: Record<string, any>): TicketRow {
  return {
    id: att(el, "id"),
    site: att(el, "site"),
    status: att(el, "status"),
    escalation: Number(att(el, "escalation") || "0"),
    node: att(el, "node"),
    alarmId: att(el, "alarm"),
    subject: text(el["subject"]),
    comments: asArray(el["comment"]).map((c: any) => ({
      time: Number(att(c, "time") || "0"),
      author: att(c, "author"),
      text: text(c),
    })),
  };
}

export function parseTicketDocument(doc: Record<string, any>): TicketRow {
  return parseTicket(doc["ticket"] ?? {});
}

// -- reducers ---------------------------------------------------------------

// Last write wins by request sequence: a response from an older poll
// must not clobber a newer one that already landed.
export function applySites(model: DashboardViewModel, seq: number,
                           overview: SitesOverview): DashboardViewModel {
  if (seq < model.seq) return model;
  return {
    ...model,
    seq,
    sites: overview.sites,
    generatedAt: overview.generatedAt,
    lastError: null,
    stale: null,
  };
}

export function applyFetchError(model: DashboardViewModel, seq: number,
                                error: ApiError): DashboardViewModel {
  if (seq < model.seq) return model;
  // a 503 from a cached view carries the timestamp of the content the
  // server still holds; keep showing the old grid with a stale badge
  const stale: StaleInfo | null = error.status === 503
    ? { code: error.code,
        generatedAt: typeof error.details["generated_at"] === "number"
          ? (error.details["generated_at"] as number) : null }
    : null;
  return { ...model, seq, lastError: error, stale,
           pendingAction: null };
}

export function selectSite(model: DashboardViewModel,
                           name: string | null): DashboardViewModel {
  return { ...model, selectedSite: name, alarmDetail: null };
}

export function showAlarm(model: DashboardViewModel,
                          alarm: AlarmRow | null): DashboardViewModel {
  return { ...model, alarmDetail: alarm };
}

export function beginAction(model: DashboardViewModel,
                            action: PendingAction): DashboardViewModel {
  return { ...model, pendingAction: action };
}

// Server acknowledged (or rejected) the action: either way the pending
// marker is cleared and the error, if any, is displayed.
export function settleAction(model: DashboardViewModel,
                             error: ApiError | null): DashboardViewModel {
  return { ...model, pendingAction: null, lastError: error };
}

export function isInsufficientRole(error: ApiError | null): boolean {
  return error !== null && error.status === 403;
}
