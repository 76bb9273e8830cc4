"""Command-line client for the hub service.

Stateful commands (query, ingest, crawl, catalog, explain, policies) talk to
a running hub over HTTP; ``serve`` starts one; ``capacity`` and ``dua render``
are pure local helpers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import httpx

from .catalog import DataUseAgreement, render_dua, usable_capacity
from .errors import HubError

DEFAULT_URL = "http://127.0.0.1:8080"


def _client(url: str) -> httpx.Client:
    return httpx.Client(base_url=url, timeout=60.0)


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _request(url: str, method: str, path: str, **kwargs) -> int:
    try:
        with _client(url) as client:
            response = client.request(method, path, **kwargs)
    except httpx.HTTPError as exc:
        print(f"cannot reach hub at {url}: {exc}", file=sys.stderr)
        return 1
    try:
        payload = response.json()
    except ValueError:
        payload = {"error": "bad response", "reason": response.text}
    if response.status_code >= 400:
        reason = payload.get("reason") or payload.get("detail") or response.text
        print(f"error: {reason}", file=sys.stderr)
        return 1
    _print_json(payload)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .hub.config import load_config
    from .hub.core import DataHub
    from .service.app import build_app

    config = load_config(args.config)
    hub = DataHub.from_config(config)
    app = build_app(hub)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def _cmd_query(args) -> int:
    return _request(
        args.url, "POST", "/query",
        json={"principal_id": args.principal, "query": args.text},
    )


def _cmd_explain(args) -> int:
    try:
        with _client(args.url) as client:
            response = client.post("/explain", json={"query": args.text})
    except httpx.HTTPError as exc:
        print(f"cannot reach hub at {args.url}: {exc}", file=sys.stderr)
        return 1
    payload = response.json()
    if response.status_code >= 400:
        print(f"error: {payload.get('reason', response.text)}", file=sys.stderr)
        return 1
    print(payload["plan"])
    return 0


def _cmd_ingest(args) -> int:
    try:
        spec = json.loads(open(args.spec_file, encoding="utf-8").read())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read ingest spec {args.spec_file}: {exc}", file=sys.stderr)
        return 1
    return _request(args.url, "POST", "/ingest", json=spec)


def _cmd_crawl(args) -> int:
    return _request(args.url, "POST", "/crawl", json={"root": args.root})


def _cmd_catalog_search(args) -> int:
    return _request(args.url, "GET", "/catalog/search", params={"q": " ".join(args.keywords)})


def _cmd_catalog_duplicates(args) -> int:
    return _request(args.url, "GET", "/catalog/duplicates")


def _cmd_catalog_stale(args) -> int:
    return _request(args.url, "POST", "/catalog/stale", json={"days": args.days})


def _cmd_policies_reload(args) -> int:
    return _request(args.url, "POST", "/policies/reload")


def _cmd_dua_render(args) -> int:
    try:
        doc = json.loads(open(args.file, encoding="utf-8").read())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read agreement {args.file}: {exc}", file=sys.stderr)
        return 1
    agreement = DataUseAgreement(
        institution=doc.get("institution", ""),
        data_description=doc.get("data_description", ""),
        duration=doc.get("duration", ""),
        collection_date_range=doc.get("collection_date_range", ""),
        collection_location=doc.get("collection_location", ""),
        personnel=tuple(doc.get("personnel", [])),
        technical_controls=doc.get("technical_controls", ""),
        deanonymization_prohibited=doc.get("deanonymization_prohibited", True),
        publication_rule=doc.get("publication_rule", ""),
        retention_rule=doc.get("retention_rule", ""),
    )
    try:
        print(render_dua(agreement))
    except HubError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_capacity(args) -> int:
    try:
        print(usable_capacity(args.raw_bytes, args.overhead))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyhub", description="Polystore data hub client")
    sub = parser.add_subparsers(dest="command", required=True)

    url_kwargs = dict(
        default=os.environ.get("POLYHUB_URL", DEFAULT_URL),
        help="hub service URL (default: $POLYHUB_URL or %(default)s)",
    )

    p = sub.add_parser("serve", help="run the hub service")
    p.add_argument("--config", required=True, help="path to the hub config file")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("query", help="run a scoped query")
    p.add_argument("-p", "--principal", required=True, help="principal id to run as")
    p.add_argument("text", help="query text, e.g. \"REL(SELECT * FROM t LIMIT 5)\"")
    p.add_argument("--url", **url_kwargs)
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("explain", help="show the plan for a query")
    p.add_argument("text", help="query text")
    p.add_argument("--url", **url_kwargs)
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("ingest", help="ingest a data file described by a spec file")
    p.add_argument("spec_file", help="JSON ingest spec")
    p.add_argument("--url", **url_kwargs)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("crawl", help="crawl a directory for datasets")
    p.add_argument("root", help="directory to crawl (as seen by the hub)")
    p.add_argument("--url", **url_kwargs)
    p.set_defaults(func=_cmd_crawl)

    catalog = sub.add_parser("catalog", help="catalog operations")
    catalog_sub = catalog.add_subparsers(dest="catalog_command", required=True)

    p = catalog_sub.add_parser("search", help="search datasets by keyword")
    p.add_argument("keywords", nargs="*", help="keywords matched against metatags and names")
    p.add_argument("--url", **url_kwargs)
    p.set_defaults(func=_cmd_catalog_search)

    p = catalog_sub.add_parser("duplicates", help="list datasets sharing a checksum")
    p.add_argument("--url", **url_kwargs)
    p.set_defaults(func=_cmd_catalog_duplicates)

    p = catalog_sub.add_parser("stale", help="flag datasets older than a threshold")
    p.add_argument("days", type=float, help="staleness threshold in days")
    p.add_argument("--url", **url_kwargs)
    p.set_defaults(func=_cmd_catalog_stale)

    policies = sub.add_parser("policies", help="policy store operations")
    policies_sub = policies.add_subparsers(dest="policies_command", required=True)
    p = policies_sub.add_parser("reload", help="re-read the policy file")
    p.add_argument("--url", **url_kwargs)
    p.set_defaults(func=_cmd_policies_reload)

    dua = sub.add_parser("dua", help="data-use agreement helpers")
    dua_sub = dua.add_subparsers(dest="dua_command", required=True)
    p = dua_sub.add_parser("render", help="render an agreement file as a document")
    p.add_argument("file", help="JSON agreement file")
    p.set_defaults(func=_cmd_dua_render)

    p = sub.add_parser("capacity", help="usable capacity after redundancy overhead")
    p.add_argument("raw_bytes", type=int, help="raw capacity in bytes")
    p.add_argument("overhead", type=float, help="redundancy overhead fraction in [0, 1)")
    p.set_defaults(func=_cmd_capacity)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
