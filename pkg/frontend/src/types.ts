// Shapes shared by the client, the view model and the renderers.
// Everything here is a projection of backend responses; the UI never
// invents state of its own.

export type AlarmStatus = "NEW" | "ASSIGNED" | "MASKED" | "OFF" | "CLOSED";

export type AlarmAction = "assign" | "mask" | "unmask" | "set-off" | "close";

export interface SiteCell {
  name: string;
  region: string;
  certification: string;
  nodeCount: number;
  openAlarmCount: number;
  openTicketCount: number;
  inDowntime: boolean;
}

export interface AlarmRow {
  id: string;
  sensor: string;
  test: string;
  node: string;
  site: string;
  failureTime: number;
  status: AlarmStatus;
  assignee: string;
  maskedBy: string;
  ticketId: string;
  message: string;
}

export interface TicketRow {
  id: string;
  site: string;
  status: string;
  escalation: number;
  node: string;
  alarmId: string;
  subject: string;
  comments: { time: number; author: string; text: string }[];
}

export interface EmailPreview {
  to: string;
  subject: string;
  body: string;
}

export interface ComposeForm {
  site: string;
  contact: string;
  subject: string;
  node: string;
  fromAlarm: string;
}

// Error envelope the backend returns on every non-2xx response.
export interface ApiError {
  status: number;
  code: string;
  message: string;
  details: Record<string, unknown>;
}

// A 503 on a cached view; generatedAt is the timestamp of the content
// the server is still holding, shown on the stale badge.
export interface StaleInfo {
  code: string;
  generatedAt: number | null;
}

export interface PendingAction {
  kind: "alarm" | "ticket";
  target: string;
  action: string;
}

export interface DashboardViewModel {
  sites: SiteCell[];
  generatedAt: number | null;
  selectedSite: string | null;
  alarmDetail: AlarmRow | null;
  pendingAction: PendingAction | null;
  lastError: ApiError | null;
  stale: StaleInfo | null;
  // request sequence of the data currently shown; stale responses
  // (lower seq) must never overwrite newer ones
  seq: number;
}
