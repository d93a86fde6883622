"""Trouble tickets kept in two mirrored stores, converged by field-level
last-writer-wins.

Every edit appends a ChangeEvent with a per-ticket, per-store sequence
number (gap-free) and carries old and new values. Synchronizing drains each
store's events into the other; a field write applies only if its stamp
(time, then store, then seq) beats the stamp that last wrote that field, so
after a full drain both stores hold field-identical tickets no matter how
the edits interleaved. Two cases bend plain last-writer-wins:

  - escalation_step merges by max; the ladder never moves down.
  - comments are append-only, deduplicated by their origin stamp.

The ladder is 0..3: 0 site notified, 1 reminder, 2 region responsible,
3 suspension proposal.

On the dual backend a mirror twin with the same id is written at creation
time. The direct backend keeps a single store for helpdesks taking plain
inserts; ids, the ladder and notification mails behave identically.
"""

import logging
import os
import threading
from dataclasses import dataclass, field

from .clock import SystemClock
from .document import ViewNode
from .errors import (
    ImmutableField, MaxEscalationReached, TicketClosed, TicketNotFound,
    TwinNotFound, ValidationFailed,
)

log = logging.getLogger(__name__)

OPS = "OPS"
CENTRAL = "CENTRAL"
STORE_RANK = {OPS: 0, CENTRAL: 1}

MAX_ESCALATION = 3
STATUSES = ("OPEN", "IN_PROGRESS", "SOLVED", "CLOSED")
MUTABLE_FIELDS = ("subject", "status", "impacted_node", "comment")
ESCALATION_LADDER = ("site notified", "reminder", "region responsible",
                     "suspension proposal")


@dataclass(frozen=True)
class ChangeEvent:
    store: str                  # store that originated the change
    seq: int                    # per-ticket sequence in the origin store
    ticket_id: str
    kind: str                   # CREATE | SET | ESCALATE | COMMENT
    time: float
    field: str = ""
    old: str = ""
    new: str = ""
    author: str = ""
    payload: tuple = ()         # CREATE only: sorted (field, value) pairs

    def stamp(self):
        return (self.time, STORE_RANK[self.store], self.seq)


@dataclass
class Comment:
    time: float
    author: str
    text: str
    origin_store: str
    origin_seq: int


@dataclass
class Ticket:
    id: str
    subject: str
    implied_site: str
    impacted_node: str = ""
    status: str = "OPEN"
    escalation_step: int = 0
    alarm_id: str = ""
    created_at: float = 0.0
    updated_at: float = 0.0
    history: list = field(default_factory=list)     # applied ChangeEvents
    stamps: dict = field(default_factory=dict)      # field -> winning stamp
    comments: list = field(default_factory=list)

    def sorted_comments(self):
        return sorted(self.comments,
                      key=lambda c: (c.time, STORE_RANK[c.origin_store],
                                     c.origin_seq))


@dataclass
class NotificationEmail:
    to: str
    subject: str
    body: str
    time: float


@dataclass
class CreateResult:
    ticket_id: str
    email: NotificationEmail = None
    email_error: str = ""


@dataclass
class SyncReport:
    applied: int = 0
    skipped: int = 0
    parked: list = field(default_factory=list)   # (ticket, origin_store, seq)


class TicketStore:
    def __init__(self, name):
        self.name = name
        self.tickets = {}
        self.log = []               # locally originated changes, in order
        self._ticket_seq = {}
        self.applied = set()        # (ticket_id, origin_store, origin_seq)

    def record(self, ticket_id, **kw) -> ChangeEvent:
        seq = self._ticket_seq.get(ticket_id, 0) + 1
        self._ticket_seq[ticket_id] = seq
        change = ChangeEvent(store=self.name, seq=seq, ticket_id=ticket_id, **kw)
        self.log.append(change)
        self.applied.add((ticket_id, change.store, change.seq))
        return change

    def get(self, ticket_id) -> Ticket:
        ticket = self.tickets.get(ticket_id)
        if ticket is None:
            raise TicketNotFound(f"no ticket '{ticket_id}'", ticket=ticket_id)
        return ticket


def email_subject(site: str, subject: str, ticket_id: str) -> str:
    """Fixed wire format consumed by downstream mail filters."""
    return f"[{site}] {subject} — ticket {ticket_id}"


def render_email(to: str, site: str, subject: str, ticket_id: str,
                 impacted_node: str, time: float) -> NotificationEmail:
    lines = [f"Ticket {ticket_id} has been opened for site {site}.", ""]
    if impacted_node:
        lines.append(f"Impacted node: {impacted_node}")
        lines.append("")
    lines += ["Please follow up through the operations dashboard.", "",
              "This message was generated automatically."]
    return NotificationEmail(to=to,
                             subject=email_subject(site, subject, ticket_id),
                             body="\n".join(lines), time=time)


class TicketBridge:
    """Public ticket API; operator edits land in the OPS store."""

    def __init__(self, registry=None, *, clock=None, backend="dual",
                 outbox_dir=None):
        if backend not in ("dual", "direct"):
            raise ValidationFailed(f"unknown ticket backend '{backend}'")
        self.registry = registry
        self.clock = clock or SystemClock()
        self.backend = backend
        self.outbox_dir = outbox_dir
        self.ops = TicketStore(OPS)
        self.central = TicketStore(CENTRAL) if backend == "dual" else None
        self._lock = threading.RLock()
        self._id_counter = 0
        self._mail_counter = 0
        if outbox_dir:
            os.makedirs(outbox_dir, exist_ok=True)

    # -- creation ----------------------------------------------------------

    def create_ticket(self, subject, implied_site, impacted_node="",
                      author="", alarm_id="") -> CreateResult:
        """Open a ticket; on the dual backend the mirror twin is written
        immediately with the same id. The notification mail renders from
        the site contact; a missing contact fails only the mail step."""
        with self._lock:
            if self.registry is not None:
                self.registry.site(implied_site)    # unknown site: store nothing
            if not subject:
                raise ValidationFailed("ticket subject must not be empty")
            now = self.clock.now()
            self._id_counter += 1
            ticket_id = "T-%06d" % self._id_counter
            fields = {
                "subject": subject, "implied_site": implied_site,
                "impacted_node": impacted_node, "alarm_id": alarm_id,
                "created_at": f"{now:.3f}",
            }
            change = self.ops.record(
                ticket_id, kind="CREATE", time=now, author=author,
                payload=tuple(sorted(fields.items())))
            self._apply_create(self.ops, change)
            if self.central is not None:
                self._apply(self.central, change)
            email, email_error = self._notify(implied_site, subject, ticket_id,
                                              impacted_node, now)
            return CreateResult(ticket_id=ticket_id, email=email,
                                email_error=email_error)

    def _notify(self, site, subject, ticket_id, impacted_node, now):
        to = f"ops@{site.lower()}"
        if self.registry is not None:
            try:
                to = self.registry.contact_for(site)
            except Exception as exc:
                return None, str(exc)
        email = render_email(to, site, subject, ticket_id, impacted_node, now)
        self._write_outbox(email)
        return email, ""

    def _write_outbox(self, email: NotificationEmail):
        if not self.outbox_dir:
            return
        self._mail_counter += 1
        path = os.path.join(self.outbox_dir, "msg-%06d.txt" % self._mail_counter)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(f"To: {email.to}\n")
            handle.write(f"Subject: {email.subject}\n\n")
            handle.write(email.body + "\n")

    # -- edits ---------------------------------------------------------------

    def get(self, ticket_id, store=None) -> Ticket:
        return (store or self.ops).get(ticket_id)

    def get_twin(self, ticket_id) -> Ticket:
        if self.central is None:
            raise TwinNotFound("direct backend keeps no mirrored ticket",
                               ticket=ticket_id)
        ticket = self.central.tickets.get(ticket_id)
        if ticket is None:
            raise TwinNotFound(f"ticket '{ticket_id}' has no central twin",
                               ticket=ticket_id)
        return ticket

    def update(self, ticket_id, field_name, value, author="", store=None):
        store = store or self.ops
        with self._lock:
            ticket = store.get(ticket_id)
            if field_name not in MUTABLE_FIELDS:
                raise ImmutableField(f"'{field_name}' cannot be changed",
                                     ticket=ticket_id, field=field_name)
            if ticket.status == "CLOSED":
                raise TicketClosed("closed tickets take no further edits",
                                   ticket=ticket_id)
            if field_name == "comment":
                return self.comment(ticket_id, author, str(value), store=store)
            if field_name == "status" and value not in STATUSES:
                raise ValidationFailed(f"unknown status '{value}'",
                                       ticket=ticket_id)
            change = store.record(
                ticket_id, kind="SET", time=self.clock.now(),
                field=field_name, old=str(getattr(ticket, field_name)),
                new=str(value), author=author)
            self._apply_set(ticket, change)
            return ticket

    def escalate(self, ticket_id, author="", store=None) -> int:
        store = store or self.ops
        with self._lock:
            ticket = store.get(ticket_id)
            if ticket.status == "CLOSED":
                raise TicketClosed("closed tickets cannot escalate",
                                   ticket=ticket_id)
            if ticket.escalation_step >= MAX_ESCALATION:
                raise MaxEscalationReached(
                    f"already at step {MAX_ESCALATION} "
                    f"({ESCALATION_LADDER[MAX_ESCALATION]})", ticket=ticket_id)
            step = ticket.escalation_step + 1
            change = store.record(
                ticket_id, kind="ESCALATE", time=self.clock.now(),
                field="escalation_step", old=str(ticket.escalation_step),
                new=str(step), author=author)
            self._apply_escalate(ticket, change)
            return ticket.escalation_step

    def comment(self, ticket_id, author, text, store=None) -> Ticket:
        store = store or self.ops
        with self._lock:
            ticket = store.get(ticket_id)
            if ticket.status == "CLOSED":
                raise TicketClosed("closed tickets take no further edits",
                                   ticket=ticket_id)
            if not text:
                raise ValidationFailed("comment text must not be empty",
                                       ticket=ticket_id)
            change = store.record(ticket_id, kind="COMMENT",
                                  time=self.clock.now(), field="comment",
                                  new=text, author=author)
            self._apply_comment(ticket, change)
            return ticket

    def close(self, ticket_id, author="", store=None) -> Ticket:
        return self.update(ticket_id, "status", "CLOSED", author=author,
                           store=store)

    # -- convergence -------------------------------------------------------------

    def sync(self) -> SyncReport:
        """Drain pending changes both ways; idempotent, order-insensitive."""
        report = SyncReport()
        with self._lock:
            if self.central is None:
                return report
            self._pump(self.ops, self.central, report)
            self._pump(self.central, self.ops, report)
        return report

    def _pump(self, source, target, report):
        for change in source.log:
            key = (change.ticket_id, change.store, change.seq)
            if key in target.applied:
                report.skipped += 1
                continue
            if change.kind != "CREATE" and change.ticket_id not in target.tickets:
                report.parked.append(key)
                continue
            self._apply(target, change)
            report.applied += 1

    def _apply(self, store, change):
        store.applied.add((change.ticket_id, change.store, change.seq))
        if change.kind == "CREATE":
            self._apply_create(store, change)
            return
        ticket = store.tickets[change.ticket_id]
        if change.kind == "SET":
            self._apply_set(ticket, change)
        elif change.kind == "ESCALATE":
            self._apply_escalate(ticket, change)
        elif change.kind == "COMMENT":
            self._apply_comment(ticket, change)

    @staticmethod
    def _touch(ticket, change):
        # updated_at tracks the last applied history event, even when a
        # drained remote change carries an older stamp.
        ticket.history.append(change)
        ticket.updated_at = change.time

    def _apply_create(self, store, change):
        if change.ticket_id in store.tickets:
            return
        data = dict(change.payload)
        ticket = Ticket(
            id=change.ticket_id,
            subject=data.get("subject", ""),
            implied_site=data.get("implied_site", ""),
            impacted_node=data.get("impacted_node", ""),
            alarm_id=data.get("alarm_id", ""),
            created_at=float(data.get("created_at", change.time)),
        )
        stamp = change.stamp()
        for name in ("subject", "status", "impacted_node"):
            ticket.stamps[name] = stamp
        store.tickets[ticket.id] = ticket
        self._touch(ticket, change)

    def _apply_set(self, ticket, change):
        self._touch(ticket, change)
        stamp = change.stamp()
        if stamp <= ticket.stamps.get(change.field, (float("-inf"), -1, -1)):
            return
        setattr(ticket, change.field, change.new)
        ticket.stamps[change.field] = stamp

    def _apply_escalate(self, ticket, change):
        # Monotone merge: the ladder only climbs, whatever the stamps say.
        self._touch(ticket, change)
        ticket.escalation_step = max(ticket.escalation_step, int(change.new))

    def _apply_comment(self, ticket, change):
        for existing in ticket.comments:
            if (existing.origin_store, existing.origin_seq) == \
                    (change.store, change.seq):
                return
        self._touch(ticket, change)
        ticket.comments.append(Comment(
            time=change.time, author=change.author, text=change.new,
            origin_store=change.store, origin_seq=change.seq))

    # -- listing / export -----------------------------------------------------------

    def list_tickets(self, site=None, status=None, store=None) -> list:
        store = store or self.ops
        with self._lock:
            found = [t for t in store.tickets.values()
                     if (site is None or t.implied_site == site)
                     and (status is None or t.status == status)]
        return sorted(found, key=lambda t: t.id)

    def count_open(self, site=None) -> int:
        return len([t for t in self.list_tickets(site=site)
                    if t.status != "CLOSED"])

    def export_document(self, site=None, status=None) -> ViewNode:
        doc = ViewNode("tickets")
        for ticket in self.list_tickets(site=site, status=status):
            doc.append(ticket_element(ticket))
        return doc


def ticket_element(ticket: Ticket) -> ViewNode:
    attrs = {
        "id": ticket.id,
        "site": ticket.implied_site,
        "status": ticket.status,
        "escalation": str(ticket.escalation_step),
        "created-at": f"{ticket.created_at:.3f}",
        "updated-at": f"{ticket.updated_at:.3f}",
    }
    if ticket.impacted_node:
        attrs["node"] = ticket.impacted_node
    if ticket.alarm_id:
        attrs["alarm"] = ticket.alarm_id
    el = ViewNode("ticket", attributes=attrs)
    subject = ViewNode("subject")
    subject.append(ticket.subject)
    el.append(subject)
    for comment in ticket.sorted_comments():
        centry = ViewNode("comment", attributes={
            "time": f"{comment.time:.3f}", "author": comment.author})
        centry.append(comment.text)
        el.append(centry)
    return el
