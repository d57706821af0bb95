"""HTTP front door: query execution, entity search, ingestion, plan retrieval."""

from __future__ import annotations

from typing import Any, Literal

from fastapi import FastAPI, Query, Request as HttpRequest
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, model_validator

from .explain import render_text
from .index import InvalidQueryError
from .ntriples import TripleSyntaxError
from .orchestrator import (
    FORMAL_QUERY,
    NL_QUERY,
    Engine,
    PipelineResult,
    PlanError,
    Request,
    StepRecord,
)


class QueryOptions(BaseModel):
    expandHierarchy: bool = False
    resultLimit: int | None = Field(default=None, ge=1)


class QueryRequestBody(BaseModel):
    kind: Literal["nl-query", "formal-query"]
    statement: str | None = None
    jvql: dict[str, Any] | None = None
    options: QueryOptions = Field(default_factory=QueryOptions)

    @model_validator(mode="after")
    def _payload_matches_kind(self) -> QueryRequestBody:
        if self.kind == NL_QUERY and (self.statement is None or self.jvql is not None):
            raise ValueError("nl-query requires 'statement' and no 'jvql'")
        if self.kind == FORMAL_QUERY and (
            self.jvql is None or self.statement is not None
        ):
            raise ValueError("formal-query requires 'jvql' and no 'statement'")
        return self


def record_dict(record: StepRecord) -> dict[str, Any]:
    return {
        "stepName": record.step_name,
        "description": record.description,
        "inputSummary": record.input_summary,
        "output": record.output,
        "status": record.status,
        "durationMs": record.duration_ms,
        "error": record.error,
    }


def query_response(result: PipelineResult) -> dict[str, Any]:
    explanation = result.explanation
    audience = result.audience
    return {
        "planId": result.plan.plan_id,
        "kind": result.plan.request_kind,
        "booleanExpression": result.boolean_expression,
        "jvql": result.jvql,
        "sparql": result.sparql,
        "audience": {
            "persons": [
                {
                    "iri": iri,
                    "name": name,
                    "matchedBranches": list(audience.matched_branches.get(iri, ())),
                }
                for iri, name in audience.persons
            ],
            "total": audience.total,
        }
        if audience
        else None,
        "stepRecords": [record_dict(r) for r in result.records],
        "explanation": {
            **explanation.to_dict(),
            "text": render_text(explanation),
        }
        if explanation
        else None,
    }


def error_response(result: PipelineResult) -> dict[str, Any]:
    failure = result.error
    assert failure is not None
    explanation = result.explanation
    return {
        "planId": result.plan.plan_id,
        "kind": result.plan.request_kind,
        "error": {
            "step": failure.step,
            "message": failure.message,
            "candidates": [
                {
                    "entityIri": m.entity.iri.value,
                    "classIri": m.entity.class_iri.value,
                    "label": m.entity.primary_label,
                    "score": m.score,
                }
                for m in failure.candidates
            ],
        },
        "stepRecords": [record_dict(r) for r in result.records],
        "explanation": {
            **explanation.to_dict(),
            "text": render_text(explanation),
        }
        if explanation
        else None,
    }


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="audiencectl", version="0.1.0")
    # The browser console is served as static files from any origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def _bad_body(_: HttpRequest, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.post("/v1/queries")
    def post_queries(body: QueryRequestBody) -> JSONResponse:
        request = Request(
            kind=body.kind,
            statement=body.statement,
            jvql=body.jvql,
            expand_hierarchy=body.options.expandHierarchy,
            result_limit=body.options.resultLimit,
        )
        try:
            result = engine.query(request)
        except PlanError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        if result.error is not None:
            return JSONResponse(status_code=422, content=error_response(result))
        return JSONResponse(status_code=200, content=query_response(result))

    @app.get("/v1/entities")
    def get_entities(
        q: str = Query(...),
        k: int = Query(default=10, ge=1, le=100),
        class_iri: str | None = Query(default=None, alias="class"),
    ) -> JSONResponse:
        try:
            matches = engine.search(q, k, class_iri=class_iri)
        except InvalidQueryError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return JSONResponse(
            status_code=200,
            content={
                "matches": [
                    {
                        "entityIri": m.entity.iri.value,
                        "classIri": m.entity.class_iri.value,
                        "label": m.entity.primary_label,
                        "altLabels": list(m.entity.alt_labels),
                        "matchedLabel": m.matched_label,
                        "score": m.score,
                    }
                    for m in matches
                ]
            },
        )

    @app.post("/v1/kb/triples")
    async def post_triples(request: HttpRequest) -> JSONResponse:
        text = (await request.body()).decode("utf-8")
        try:
            report = engine.load_document(text)
        except TripleSyntaxError as exc:
            return JSONResponse(
                status_code=400,
                content={"error": str(exc), "line": exc.line_no},
            )
        return JSONResponse(
            status_code=200,
            content={"count": report.count, "storeSeq": engine.store.seq},
        )

    @app.get("/v1/plans/{plan_id}")
    def get_plan(plan_id: str) -> JSONResponse:
        result = engine.plans.get(plan_id)
        if result is None:
            return JSONResponse(
                status_code=404, content={"error": f"unknown plan {plan_id}"}
            )
        explanation = result.explanation
        return JSONResponse(
            status_code=200,
            content={
                "planId": result.plan.plan_id,
                "kind": result.plan.request_kind,
                "steps": [
                    {"name": s.name, "description": s.description}
                    for s in result.plan.steps
                ],
                "stepRecords": [record_dict(r) for r in result.records],
                "explanation": {
                    **explanation.to_dict(),
                    "text": render_text(explanation),
                }
                if explanation
                else None,
            },
        )

    return app
