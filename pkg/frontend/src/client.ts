// Thin fetch client for the dashboard backend. All state lives on the
// server; this module only moves JSON and turns the error envelope into
// typed exceptions.

import type { AlarmAction, ApiError } from "./types.js";

export class BackendError extends Error implements ApiError {
  status: number;
  code: string;
  details: Record<string, unknown>;

  constructor(status: number, code: string, message: string,
              details: Record<string, unknown>) {
    super(message);
    this.name = "BackendError";
    this.status = status;
    this.code = code;
    this.details = details;
  }
}

export function asApiError(err: unknown): ApiError {
  if (err instanceof BackendError) {
    return { status: err.status, code: err.code, message: err.message,
             details: err.details };
  }
  const message = err instanceof Error ? err.message : String(err);
  return { status: 0, code: "NETWORK", message, details: {} };
}

export interface ClientConfig {
  baseUrl: string;
  token?: string;
}

type Json = Record<string, any>;

export class GridOpsClient {
  baseUrl: string;
  token: string;

  constructor(config: ClientConfig) {
    this.baseUrl = config.baseUrl.replace(/\/+$/, "");
    this.token = config.token ?? "";
  }

  private headers(extra?: Record<string, string>): Record<string, string> {
    const h: Record<string, string> = { ...extra };
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async decode(res: Response): Promise<Json> {
    const text = await res.text();
    let parsed: Json = {};
    try {
      parsed = text ? JSON.parse(text) : {};
    } catch {
      parsed = {};
    }
    if (!res.ok) {
      const env = parsed["error"] ?? {};
      throw new BackendError(res.status, env["code"] ?? `HTTP_${res.status}`,
                             env["message"] ?? text, env["details"] ?? {});
    }
    return parsed;
  }

  private async get(path: string): Promise<Json> {
    const res = await fetch(this.baseUrl + path, { headers: this.headers() });
    return this.decode(res);
  }

  private async send(method: string, path: string, body?: unknown,
                     contentType = "application/json"): Promise<Json> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: this.headers(body === undefined ? {}
                            : { "Content-Type": contentType }),
      body: body === undefined ? undefined
            : typeof body === "string" ? body : JSON.stringify(body),
    });
    return this.decode(res);
  }

  health(): Promise<Json> {
    return this.get("/health");
  }

  sitesOverview(): Promise<Json> {
    return this.get("/sites");
  }

  siteSummary(name: string): Promise<Json> {
    return this.get(`/sites/${encodeURIComponent(name)}/summary`);
  }

  listAlarms(opts: { site?: string; statuses?: string[];
                     includeMasked?: boolean } = {}): Promise<Json> {
    const q = new URLSearchParams();
    if (opts.site) q.set("site", opts.site);
    if (opts.statuses?.length) q.set("status", opts.statuses.join(","));
    if (opts.includeMasked) q.set("include_masked", "true");
    const query = q.toString();
    return this.get("/alarms" + (query ? `?${query}` : ""));
  }

  getAlarm(id: string): Promise<Json> {
    return this.get(`/alarms/${encodeURIComponent(id)}`);
  }

  alarmHistory(id: string): Promise<Json> {
    return this.get(`/alarms/${encodeURIComponent(id)}/history`);
  }

  ingestAlarms(xml: string): Promise<Json> {
    return this.send("POST", "/alarms/ingest", xml, "application/xml");
  }

  transitionAlarm(id: string, action: AlarmAction | string,
                  opts: { assignee?: string; master?: string; note?: string;
                          actor?: string } = {}): Promise<Json> {
    return this.send("POST", `/alarms/${encodeURIComponent(id)}/transition`,
                     { action, ...opts });
  }

  createTicket(body: { site: string; subject: string; impacted_node?: string;
                       from_alarm?: string; author?: string }): Promise<Json> {
    return this.send("POST", "/tickets", body);
  }

  getTicket(id: string): Promise<Json> {
    return this.get(`/tickets/${encodeURIComponent(id)}`);
  }

  listTickets(opts: { site?: string; status?: string } = {}): Promise<Json> {
    const q = new URLSearchParams();
    if (opts.site) q.set("site", opts.site);
    if (opts.status) q.set("status", opts.status);
    const query = q.toString();
    return this.get("/tickets" + (query ? `?${query}` : ""));
  }

  escalateTicket(id: string): Promise<Json> {
    return this.send("POST", `/tickets/${encodeURIComponent(id)}/escalate`);
  }

  getView(name: string): Promise<Json> {
    return this.get(`/views/${encodeURIComponent(name)}`);
  }

  refreshView(name: string): Promise<Json> {
    return this.send("POST", `/views/${encodeURIComponent(name)}/refresh`);
  }

  advanceClock(seconds: number): Promise<Json> {
    return this.send("POST", "/clock/advance", { seconds });
  }
}

// The JSON mapping collapses a single repeated element into a plain
// object; normalize before iterating.
export function asArray<T>(value: T | T[] | undefined | null): T[] {
  if (value === undefined || value === null) return [];
  return Array.isArray(value) ? value : [value];
}

export function att(node: Json | undefined, name: string): string {
  if (!node) return "";
  const v = node["@" + name];
  return v === undefined || v === null ? "" : String(v);
}

export function text(node: Json | string | undefined): string {
  if (node === undefined || node === null) return "";
  if (typeof node === "string") return node;
  const v = node["#text"];
  return v === undefined || v === null ? "" : String(v);
}
