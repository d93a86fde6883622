"""Command line entry point.

    gridops serve --config service.xml [--host H] [--port P]
    gridops validate-config views.xml
    gridops refresh --config service.xml VIEW
    gridops query --config service.xml VIEW QUERY
    gridops scenario run scenario.xml [--config service.xml]
    gridops gen-topology N [--seed S]

Exit codes: 0 on success, 1 on an operational error, 2 on bad usage.
"""

import argparse
import logging
import os
import sys
import tempfile

from .config import parse_views_text, validate_configuration
from .document import from_xml, to_xml
from .errors import GridOpsError
from .service import GridOpsService, ServiceConfig
from .simsources import generate_topology, run_scenario

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridops", description="regional grid operations dashboard")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    serve = commands.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--config", required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8321)

    validate = commands.add_parser("validate-config",
                                   help="check a views configuration file")
    validate.add_argument("path")

    refresh = commands.add_parser("refresh", help="refresh one view offline")
    refresh.add_argument("--config", required=True)
    refresh.add_argument("view")

    query = commands.add_parser("query", help="evaluate a path query offline")
    query.add_argument("--config", required=True)
    query.add_argument("view")
    query.add_argument("query")

    scenario = commands.add_parser("scenario", help="scripted scenarios")
    scenario_cmds = scenario.add_subparsers(dest="scenario_command",
                                            required=True)
    run = scenario_cmds.add_parser("run", help="run a scenario file")
    run.add_argument("path")
    run.add_argument("--config", default="",
                     help="service config; default is a bare virtual-clock "
                          "service")

    topo = commands.add_parser("gen-topology",
                               help="print a generated topology")
    topo.add_argument("sites", type=int)
    topo.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s %(message)s")
    try:
        return _dispatch(args)
    except GridOpsError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"IO error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "serve":
        return _serve(args)
    if args.command == "validate-config":
        return _validate(args)
    if args.command == "refresh":
        service = GridOpsService.from_file(args.config)
        result = service.engine.refresh_view(args.view)
        print(f"{args.view}: {result.outcome.value} v{result.version}")
        return 0
    if args.command == "query":
        service = GridOpsService.from_file(args.config)
        print(to_xml(service.engine.query_view(args.view, args.query)))
        return 0
    if args.command == "scenario":
        if args.config:
            service = GridOpsService.from_file(args.config)
        else:
            base = os.path.dirname(os.path.abspath(args.path))
            scratch = tempfile.mkdtemp(prefix="gridops-scenario-")
            service = GridOpsService(ServiceConfig(
                base_dir=base, clock_virtual=True,
                storage_dir=os.path.join(scratch, "var"),
                outbox_dir=os.path.join(scratch, "outbox")))
        with open(args.path, encoding="utf-8") as handle:
            doc = from_xml(handle.read(), strip_space=True)
        lines = run_scenario(service, doc)
        for line in lines:
            print(line)
        failed = [line for line in lines if " FAIL" in line or " !! " in line]
        return 1 if failed else 0
    if args.command == "gen-topology":
        print(to_xml(generate_topology(args.sites, seed=args.seed),
                     declaration=True))
        return 0
    return 2


def _serve(args) -> int:
    import uvicorn

    from .api import create_app

    service = GridOpsService.from_file(args.config)
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _validate(args) -> int:
    with open(args.path, encoding="utf-8") as handle:
        configs, groups = parse_views_text(handle.read())
    validate_configuration(configs, groups)
    print(f"ok: {len(configs)} views, {len(groups)} sync groups")
    return 0


if __name__ == "__main__":
    sys.exit(main())
