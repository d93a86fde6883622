// Ticket composition with a live preview of the notification email.
// The preview is built from the same template the backend uses, so what
// the operator reads is what the site contact receives; only the ticket
// id is unknown until the server assigns one.

import { GridOpsClient, asApiError } from "./client.js";
import { escapeHtml } from "./sitegrid.js";
import type { AlarmRow, ApiError, ComposeForm, EmailPreview } from "./types.js";

export const TICKET_ID_PLACEHOLDER = "T-??????";

export function emailSubject(site: string, subject: string,
                             ticketId: string): string {
  return `[${site}] ${subject} — ticket ${ticketId}`;
}

export function emailBody(site: string, ticketId: string,
                          impactedNode: string): string {
  const lines = [`Ticket ${ticketId} has been opened for site ${site}.`, ""];
  if (impactedNode) {
    lines.push(`Impacted node: ${impactedNode}`);
    lines.push("");
  }
  lines.push("Please follow up through the operations dashboard.", "",
             "This message was generated automatically.");
  return lines.join("\n");
}

export function previewEmail(form: ComposeForm,
                             ticketId = TICKET_ID_PLACEHOLDER): EmailPreview {
  return {
    to: form.contact,
    subject: emailSubject(form.site, form.subject, ticketId),
    body: emailBody(form.site, ticketId, form.node),
  };
}

// Opening a ticket straight from an alarm row pre-fills the form with
// the failing test and node.
export function prefillFromAlarm(alarm: AlarmRow, contact: string): ComposeForm {
  return {
    site: alarm.site,
    contact,
    subject: `${alarm.test} failure on ${alarm.node}`,
    node: alarm.node,
    fromAlarm: alarm.id,
  };
}

// Client-side checks; a form with problems never reaches the server.
export function validateCompose(form: ComposeForm): string[] {
  const problems: string[] = [];
  if (!form.site) problems.push("site is required");
  if (!form.subject.trim()) problems.push("subject must not be empty");
  return problems;
}

export function renderEmailPreview(preview: EmailPreview): string {
  return `<div class="email-preview">` +
    `<div class="hdr">To: ${escapeHtml(preview.to)}</div>` +
    `<div class="hdr">Subject: ${escapeHtml(preview.subject)}</div>` +
    `<pre class="body">${escapeHtml(preview.body)}</pre>` +
    `</div>`;
}

export function renderComposeForm(form: ComposeForm,
                                  problems: string[] = []): string {
  const issues = problems.length
    ? `<ul class="problems">` +
      problems.map((p) => `<li>${escapeHtml(p)}</li>`).join("") + `</ul>`
    : "";
  const disabled = problems.length ? " disabled" : "";
  return `<form class="compose" data-site="${escapeHtml(form.site)}">` +
    issues +
    `<label>Subject <input name="subject"` +
    ` value="${escapeHtml(form.subject)}"></label>` +
    `<label>Node <input name="node" value="${escapeHtml(form.node)}"></label>` +
    (form.fromAlarm
      ? `<input type="hidden" name="from_alarm"` +
        ` value="${escapeHtml(form.fromAlarm)}">`
      : "") +
    renderEmailPreview(previewEmail(form)) +
    `<button type="submit"${disabled}>open ticket</button>` +
    `</form>`;
}

export interface SubmitOutcome {
  ticketId: string;
  emailSubject: string;
  emailTo: string;
  emailError: string;
  error: ApiError | null;
  blocked: string[];
}

// Validate, submit, report. A validation problem short-circuits without
// touching the network; a backend rejection comes back verbatim.
export async function submitTicket(client: GridOpsClient,
                                   form: ComposeForm): Promise<SubmitOutcome> {
  const blocked = validateCompose(form);
  const outcome: SubmitOutcome = {
    ticketId: "", emailSubject: "", emailTo: "", emailError: "",
    error: null, blocked,
  };
  if (blocked.length) return outcome;
  try {
    const res = await client.createTicket({
      site: form.site,
      subject: form.subject,
      impacted_node: form.node || undefined,
      from_alarm: form.fromAlarm || undefined,
    });
    outcome.ticketId = String(res["ticket_id"] ?? "");
    const email = res["email"];
    if (email) {
      outcome.emailSubject = String(email["subject"] ?? "");
      outcome.emailTo = String(email["to"] ?? "");
    }
    outcome.emailError = String(res["email_error"] ?? "");
  } catch (err) {
    outcome.error = asApiError(err);
  }
  return outcome;
}
