import { describe, expect, it } from "vitest";

import { actionsFor, renderAlarmTable, renderErrorBanner } from "../src/alarmlist.js";
import type { AlarmRow } from "../src/types.js";

function row(over: Partial<AlarmRow> = {}): AlarmRow {
  return {
    id: "A-000001", sensor: "temp", test: "ping", node: "n1.example",
    site: "SITE-001", failureTime: 100, status: "NEW", assignee: "",
    maskedBy: "", ticketId: "", message: "", ...over,
  };
}

describe("alarm table", () => {
  it("offers only the transitions the state machine allows", () => {
    expect(actionsFor("NEW")).toEqual(["assign", "mask", "set-off"]);
    expect(actionsFor("ASSIGNED")).toEqual(["close"]);
    expect(actionsFor("MASKED")).toEqual(["unmask"]);
    expect(actionsFor("OFF")).toEqual(["close"]);
    expect(actionsFor("CLOSED")).toEqual([]);
    expect(actionsFor("GARBAGE")).toEqual([]);
  });

  it("the status filter splits the rows", () => {
    const rows = [row(), row({ id: "A-000002", status: "ASSIGNED",
                               assignee: "olga" })];
    const assigned = renderAlarmTable(rows, "ASSIGNED");
    expect(assigned).toContain("A-000002");
    expect(assigned).not.toContain("A-000001");
    const everything = renderAlarmTable(rows);
    expect(everything).toContain("A-000001");
    expect(everything).toContain("A-000002");
  });

  it("an empty filter result says so", () => {
    expect(renderAlarmTable([row()], "CLOSED")).toContain("no alarms");
  });

  it("linked tickets and masking masters show on the row", () => {
    const html = renderAlarmTable([
      row({ ticketId: "T-000009" }),
      row({ id: "A-000002", status: "MASKED", maskedBy: "A-000001" }),
    ]);
    expect(html).toContain("T-000009");
    expect(html).toContain("masked by A-000001");
  });
});

describe("error banner", () => {
  it("shows the backend code verbatim", () => {
    const html = renderErrorBanner({ status: 409, code: "CROSS_SITE_MASK",
      message: "master must be on the same site", details: {} });
    expect(html).toContain("CROSS_SITE_MASK");
    expect(html).toContain("master must be on the same site");
  });

  it("privilege errors get their own wording", () => {
    const html = renderErrorBanner({ status: 403, code: "FORBIDDEN",
      message: "needs OPERATOR, granted READONLY", details: {} });
    expect(html).toContain("insufficient role");
    expect(html).toContain("forbidden");
  });
});
