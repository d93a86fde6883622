"""HTTP surface: bearer-token auth, JSON/XML content negotiation and a
total mapping from service errors to status codes.

Every error response has one shape:

    {"error": {"code": "...", "message": "...", "details": {...}}}
"""

import logging

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .alarms import alarm_element
from .config import parse_views, validate_configuration
from .document import ViewNode, from_xml, to_json_obj, to_xml
from .errors import Forbidden, GridOpsError, SourceMalformed, Unauthorized, ValidationFailed
from .service import Role
from .tickets import ticket_element

log = logging.getLogger(__name__)

ERROR_STATUS = {
    "QUERY_PARSE_ERROR": 400,
    "UNAUTHORIZED": 401,
    "FORBIDDEN": 403,
    "VIEW_NOT_FOUND": 404,
    "SITE_NOT_FOUND": 404,
    "ALARM_NOT_FOUND": 404,
    "TICKET_NOT_FOUND": 404,
    "MASTER_NOT_FOUND": 404,
    "TWIN_NOT_FOUND": 404,
    "ILLEGAL_TRANSITION": 409,
    "MASK_CYCLE": 409,
    "CROSS_SITE_MASK": 409,
    "ALARM_NOT_LINKABLE": 409,
    "MAX_ESCALATION_REACHED": 409,
    "TICKET_CLOSED": 409,
    "IMMUTABLE_FIELD": 409,
    "VALIDATION_FAILED": 422,
    "CONFIG_INVALID": 422,
    "CYCLE_DETECTED": 422,
    "TOPOLOGY_MALFORMED": 422,
    "CONTACT_MISSING": 422,
    "SOURCE_MALFORMED": 422,
    "SCRIPT_INVALID": 422,
    "VIEW_SUSPENDED": 503,
    "CONTENT_OUTDATED": 503,
    "VIEW_EMPTY": 503,
    "SOURCE_UNREACHABLE": 503,
    "TIMEOUT": 503,
    "INTERNAL": 500,
}


def error_response(exc: GridOpsError) -> JSONResponse:
    status = ERROR_STATUS.get(exc.code, 500)
    details = {k: _plain(v) for k, v in exc.details.items()}
    return JSONResponse(
        status_code=status,
        content={"error": {"code": exc.code, "message": exc.message,
                           "details": details}})


def _plain(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return str(value)


def document_response(doc, fmt: str, headers=None) -> Response:
    if fmt == "xml":
        return Response(content=to_xml(doc, declaration=True),
                        media_type="application/xml", headers=headers or {})
    return JSONResponse(content=to_json_obj(doc), headers=headers or {})


def pick_format(request: Request) -> str:
    fmt = request.query_params.get("format", "").lower()
    if fmt in ("xml", "json"):
        return fmt
    accept = request.headers.get("accept", "")
    return "xml" if "xml" in accept else "json"


async def read_xml_body(request: Request):
    raw = await request.body()
    try:
        return from_xml(raw.decode("utf-8"), strip_space=True)
    except GridOpsError:
        raise
    except Exception as exc:
        raise SourceMalformed(f"request body is not well-formed XML: {exc}")


async def read_json_body(request: Request) -> dict:
    try:
        data = await request.json()
    except Exception:
        raise ValidationFailed("request body must be a JSON object")
    if not isinstance(data, dict):
        raise ValidationFailed("request body must be a JSON object")
    return data


def create_app(service) -> FastAPI:
    app = FastAPI(title="grid operations dashboard", docs_url=None,
                  redoc_url=None)

    @app.exception_handler(GridOpsError)
    async def on_error(request, exc):
        return error_response(exc)

    def require(request: Request, role: Role):
        header = request.headers.get("authorization", "")
        token = header[7:] if header.lower().startswith("bearer ") else ""
        if not service.config.tokens:
            return
        if not token:
            raise Unauthorized("missing bearer token")
        granted = service.role_for(token)
        if granted is None:
            raise Unauthorized("unknown token")
        if granted < role:
            raise Forbidden(f"needs {role.name} access", granted=granted.name)

    # -- health / time -------------------------------------------------------

    @app.get("/health")
    async def health():
        return {"status": "ok", "time": service.clock.now()}

    @app.get("/time")
    async def get_time(request: Request):
        require(request, Role.READONLY)
        return {"time": service.clock.now(),
                "virtual": getattr(service.clock, "virtual", False)}

    @app.post("/clock/advance")
    async def advance_clock(request: Request):
        require(request, Role.OPERATOR)
        if not getattr(service.clock, "virtual", False):
            raise ValidationFailed("the service runs on the system clock")
        body = await read_json_body(request)
        seconds = float(body.get("seconds", 0))
        service.clock.advance(seconds)
        plan, closed = service.tick()
        return {"time": service.clock.now(), "refreshed": plan,
                "auto_closed": closed}

    # -- views ------------------------------------------------------------------

    @app.get("/views")
    async def list_views(request: Request):
        require(request, Role.READONLY)
        return document_response(service.engine.introspect(),
                                 pick_format(request))

    @app.get("/views/{name}")
    async def get_view(name: str, request: Request):
        require(request, Role.READONLY)
        snap = service.engine.get_snapshot(name)
        return document_response(snap.content, pick_format(request), headers={
            "x-content-version": str(snap.version),
            "x-generated-at": f"{snap.generated_at:.3f}",
        })

    @app.get("/views/{name}/query")
    async def query_view(name: str, request: Request):
        require(request, Role.READONLY)
        query = request.query_params.get("q", "")
        result = service.engine.query_view(name, query)
        return document_response(result, pick_format(request))

    @app.post("/views/{name}/query")
    async def query_view_body(name: str, request: Request):
        # Body carries the path expression as plain text.
        require(request, Role.READONLY)
        query = (await request.body()).decode("utf-8").strip()
        result = service.engine.query_view(name, query)
        return document_response(result, pick_format(request))

    @app.post("/views/{name}/refresh")
    async def refresh_view(name: str, request: Request):
        require(request, Role.OPERATOR)
        result = service.engine.refresh_view(name)
        return {"view": name, "outcome": result.outcome.value,
                "version": result.version}

    @app.post("/sync-groups/{name}/refresh")
    async def refresh_group(name: str, request: Request):
        require(request, Role.OPERATOR)
        results = service.engine.expose_sync_group(name)
        return {view: {"outcome": r.outcome.value, "version": r.version}
                for view, r in results.items()}

    @app.post("/events/{topic}")
    async def post_event(topic: str, request: Request):
        require(request, Role.OPERATOR)
        plan = service.engine.notify_event(topic)
        return {"topic": topic, "refreshed": plan}

    # -- administration ---------------------------------------------------------

    @app.post("/admin/reload")
    async def reload_views(request: Request):
        require(request, Role.ADMIN)
        doc = await read_xml_body(request)
        configs, groups = parse_views(doc)
        configs, groups = service.merge_auto_views(configs, groups)
        report = service.engine.reload_configuration(configs, groups)
        return {"suspended": report.suspended, "unchanged": report.unchanged,
                "added": report.added, "removed": report.removed}

    @app.post("/admin/validate")
    async def validate_views(request: Request):
        require(request, Role.ADMIN)
        doc = await read_xml_body(request)
        configs, groups = parse_views(doc)
        validate_configuration(configs, groups)
        return {"ok": True, "views": sorted(c.name for c in configs)}

    @app.get("/admin/introspect")
    async def introspect(request: Request):
        require(request, Role.ADMIN)
        return document_response(service.engine.introspect(),
                                 pick_format(request))

    # -- sites ---------------------------------------------------------------------

    @app.get("/sites")
    async def list_sites(request: Request):
        require(request, Role.READONLY)
        return document_response(service.sites_overview(), pick_format(request))

    @app.get("/sites/{name}/summary")
    async def get_site_summary(name: str, request: Request):
        require(request, Role.READONLY)
        return document_response(service.site_summary(name),
                                 pick_format(request))

    # -- alarms -----------------------------------------------------------------------

    @app.get("/alarms")
    async def list_alarms(request: Request):
        require(request, Role.READONLY)
        params = request.query_params
        statuses = [s for raw in params.getlist("status")
                    for s in raw.split(",") if s] or None
        found = service.alarms.list_alarms(
            site=params.get("site"), statuses=statuses,
            include_masked=params.get("include_masked",
                                      "false").lower() == "true")
        doc = ViewNode("alarms")
        for alarm in found:
            doc.append(alarm_element(alarm))
        return document_response(doc, pick_format(request))

    @app.post("/alarms/ingest")
    async def ingest_alarms(request: Request):
        require(request, Role.OPERATOR)
        doc = await read_xml_body(request)
        report = service.ingest_alarms(doc, actor="api")
        return {"new": report.new_ids, "duplicates": report.duplicates,
                "malformed": [{"index": i, "reason": r}
                              for i, r in report.malformed]}

    @app.get("/alarms/{alarm_id}")
    async def get_alarm(alarm_id: str, request: Request):
        require(request, Role.READONLY)
        alarm = service.alarms.get(alarm_id)
        return document_response(alarm_element(alarm), pick_format(request))

    @app.get("/alarms/{alarm_id}/history")
    async def alarm_history(alarm_id: str, request: Request):
        require(request, Role.READONLY)
        return document_response(service.alarms.history_document(alarm_id),
                                 pick_format(request))

    @app.post("/alarms/{alarm_id}/transition")
    async def alarm_transition(alarm_id: str, request: Request):
        require(request, Role.OPERATOR)
        body = await read_json_body(request)
        action = body.get("action", "")
        if not action:
            raise ValidationFailed("body requires an action")
        alarm = service.alarm_action(
            alarm_id, action, body.get("actor", "api"),
            assignee=body.get("assignee", ""),
            master=body.get("master", ""), note=body.get("note", ""))
        return document_response(alarm_element(alarm), pick_format(request))

    @app.post("/alarms/{alarm_id}/link")
    async def alarm_link(alarm_id: str, request: Request):
        require(request, Role.OPERATOR)
        body = await read_json_body(request)
        ticket_id = body.get("ticket_id", "")
        if not ticket_id:
            raise ValidationFailed("body requires a ticket_id")
        alarm = service.link_alarm(alarm_id, ticket_id,
                                   actor=body.get("actor", ""))
        return document_response(alarm_element(alarm), pick_format(request))

    # -- tickets ------------------------------------------------------------------------

    @app.get("/tickets")
    async def list_tickets(request: Request):
        require(request, Role.READONLY)
        doc = service.tickets.export_document(
            site=request.query_params.get("site"),
            status=request.query_params.get("status"))
        return document_response(doc, pick_format(request))

    @app.post("/tickets")
    async def create_ticket(request: Request):
        require(request, Role.OPERATOR)
        body = await read_json_body(request)
        site, subject = body.get("site", ""), body.get("subject", "")
        if not site or not subject:
            raise ValidationFailed("body requires site and subject")
        result = service.create_ticket(
            subject, site, impacted_node=body.get("impacted_node", ""),
            from_alarm=body.get("from_alarm", body.get("alarm_id", "")),
            author=body.get("author", ""))
        email = None
        if result.email is not None:
            email = {"to": result.email.to, "subject": result.email.subject}
        return {"ticket_id": result.ticket_id, "email": email,
                "email_error": result.email_error}

    @app.get("/tickets/{ticket_id}")
    async def get_ticket(ticket_id: str, request: Request):
        require(request, Role.READONLY)
        ticket = service.tickets.get(ticket_id)
        return document_response(ticket_element(ticket), pick_format(request))

    @app.get("/tickets/{ticket_id}/twin")
    async def get_twin(ticket_id: str, request: Request):
        require(request, Role.READONLY)
        ticket = service.tickets.get_twin(ticket_id)
        return document_response(ticket_element(ticket), pick_format(request))

    @app.patch("/tickets/{ticket_id}")
    async def patch_ticket(ticket_id: str, request: Request):
        require(request, Role.OPERATOR)
        body = await read_json_body(request)
        author = body.pop("author", "")
        if not body:
            raise ValidationFailed("no fields to update")
        for field_name, value in body.items():
            service.update_ticket(ticket_id, field_name, value, author=author)
        ticket = service.tickets.get(ticket_id)
        return document_response(ticket_element(ticket), pick_format(request))

    @app.post("/tickets/{ticket_id}/escalate")
    async def escalate_ticket(ticket_id: str, request: Request):
        require(request, Role.OPERATOR)
        step = service.escalate_ticket(ticket_id)
        return {"ticket_id": ticket_id, "escalation_step": step}

    @app.post("/tickets/{ticket_id}/comments")
    async def comment_ticket(ticket_id: str, request: Request):
        require(request, Role.OPERATOR)
        body = await read_json_body(request)
        ticket = service.comment_ticket(ticket_id, body.get("author", "api"),
                                        body.get("text", ""))
        return {"ticket_id": ticket_id, "comments": len(ticket.comments)}

    @app.post("/tickets/{ticket_id}/close")
    async def close_ticket(ticket_id: str, request: Request):
        require(request, Role.OPERATOR)
        ticket = service.close_ticket(ticket_id)
        return document_response(ticket_element(ticket), pick_format(request))

    @app.post("/tickets/sync")
    async def sync_tickets(request: Request):
        require(request, Role.OPERATOR)
        report = service.sync_tickets()
        return {"applied": report.applied, "skipped": report.skipped,
                "parked": [{"ticket": t, "store": s, "seq": q}
                           for t, s, q in report.parked]}

    return app
