"""HTTP API for the validation dashboard and programmatic clients.

All mutations go through here at runtime and append one or two events per
successful call; reads never block. Validation tokens travel only in URL
paths and are never written to service logs.
"""

from __future__ import annotations

import json
from dataclasses import replace

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .codemeta import build_codemeta, serialize_jsonld
from .expose import NoLinks, NotFound, OaiPmhProvider, signposting_headers
from .lifecycle import IllegalTransition, InvalidToken, LifecycleError
from .store import LifecycleStore


def _error(status: int, code: str, detail: str = "") -> JSONResponse:
    return JSONResponse({"code": code, "detail": detail}, status_code=status)


def _candidate_fields(store: LifecycleStore, record) -> dict:
    candidate = store.candidates.get(record.candidate_id)
    if candidate is None:
        return {"name": record.candidate_id, "url": None, "version": None, "publisher": None}
    cm = build_codemeta(candidate, record.paper_id)
    return {
        "name": cm.name,
        "url": cm.code_repository,
        "version": cm.version,
        "publisher": cm.publisher,
    }


def _record_json(store: LifecycleStore, record) -> dict:
    paper = store.papers.get(record.paper_id)
    evidence = record.history[0].payload.get("evidence", {}) if record.history else {}
    return {
        "record_id": record.record_id,
        "paper_id": record.paper_id,
        "paper_title": paper.title if paper else record.paper_id,
        "state": record.state.value,
        "sentence": evidence.get("sentence", ""),
        "candidate": _candidate_fields(store, record),
    }


def create_app(
    store: LifecycleStore,
    provider: OaiPmhProvider,
    resolver_base: str = "https://archive.softwareheritage.org/",
    public_base: str = "",
    dashboard_dist=None,
) -> FastAPI:
    app = FastAPI(title="softassets", docs_url=None, redoc_url=None)

    @app.get("/api/pending")
    def pending():
        return [_record_json(store, r) for r in store.pending_manager()]

    @app.post("/api/records/{record_id}/manager-approve")
    def manager_approve(record_id: str):
        try:
            record, _, _ = store.manager_approve(record_id)
        except IllegalTransition as exc:
            return _error(409, "illegal_transition", str(exc))
        except LifecycleError as exc:
            return _error(404, "unknown_record", str(exc))
        return {"record_id": record.record_id, "state": record.state.value}

    @app.post("/api/records/{record_id}/manager-reject")
    def manager_reject(record_id: str):
        try:
            record = store.manager_reject(record_id)
        except IllegalTransition as exc:
            return _error(409, "illegal_transition", str(exc))
        except LifecycleError as exc:
            return _error(404, "unknown_record", str(exc))
        return {"record_id": record.record_id, "state": record.state.value}

    @app.get("/api/validate/{token}")
    def validation_view(token: str):
        try:
            return store.validation_view(token)
        except InvalidToken:
            return _error(410, "invalid_token", "link expired or already used")

    @app.post("/api/validate/{token}")
    async def validation_decision(token: str, request: Request):
        try:
            body = json.loads(await request.body())
        except ValueError:
            return _error(400, "bad_json", "request body is not valid JSON")
        if not isinstance(body, dict) or body.get("decision") not in ("confirm", "amend", "reject"):
            return _error(400, "bad_decision", "decision must be confirm, amend or reject")
        try:
            record = store.apply_author_decision(
                token, body["decision"], body.get("amendments")
            )
        except InvalidToken:
            return _error(410, "invalid_token", "link expired or already used")
        except IllegalTransition as exc:
            return _error(409, "illegal_transition", str(exc))
        except ValueError as exc:
            return _error(400, "bad_amendments", str(exc))
        return {"record_id": record.record_id, "state": record.state.value}

    @app.get("/api/assets/{candidate_id}/codemeta.json")
    def asset_codemeta(candidate_id: str):
        candidate = store.candidates.get(candidate_id)
        if candidate is None:
            return _error(404, "unknown_candidate", candidate_id)
        related = sorted(
            (
                r
                for r in store.records.values()
                if r.candidate_id == candidate_id
            ),
            key=lambda r: r.record_id,
        )
        record = build_codemeta(candidate, related[0].paper_id if related else "unknown")
        papers = tuple(sorted({r.paper_id for r in related})) or record.reference_publication
        swhids = sorted({r.swhid for r in related if r.swhid})
        record = replace(
            record,
            reference_publication=papers,
            identifier=swhids[0] if swhids else None,
        )
        return Response(content=serialize_jsonld(record), media_type="application/ld+json")

    @app.get("/api/papers/{paper_id:path}/links")
    def paper_links(paper_id: str):
        try:
            link_record = provider.exposed_link_record(paper_id)
        except (NotFound, NoLinks) as exc:
            return _error(404, "no_links", str(exc))
        payload = {
            "paper_id": link_record.paper_id,
            "paper_title": link_record.paper_title,
            "related": [
                {
                    "swhid": r.swhid,
                    "relation_type": r.relation_type,
                    "software_name": r.software_name,
                    "codemeta_ref": r.codemeta_ref,
                }
                for r in link_record.related
            ],
        }
        response = JSONResponse(payload)
        for value in signposting_headers(
            provider, paper_id, resolver_base=resolver_base, public_base=public_base
        ):
            response.headers.append("Link", value)
        return response

    @app.get("/oai")
    def oai(request: Request):
        return Response(
            content=provider.handle(dict(request.query_params)), media_type="text/xml"
        )

    if dashboard_dist is not None:
        app.mount("/dashboard", StaticFiles(directory=str(dashboard_dist), html=True), name="dashboard")

    return app


def app_from_config(config, store: LifecycleStore | None = None) -> FastAPI:
    store = store or config.open_store()
    provider = OaiPmhProvider(store, base_url=f"{config.public_base}/oai")
    dist = config.dashboard_dist if config.dashboard_dist and config.dashboard_dist.exists() else None
    return create_app(
        store,
        provider,
        resolver_base=config.resolver_base,
        public_base=config.public_base,
        dashboard_dist=dist,
    )
