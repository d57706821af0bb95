"""audiencectl: command-line mirror of the HTTP API.

Subcommands run against an embedded engine by default; pass --server (or set
ATGT_SERVER) to talk to a running service instead. Exit codes: 0 ok,
2 pipeline error, 3 input error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .llm import HttpProvider, ProviderError, ScriptedProvider
from .ntriples import TripleSyntaxError
from .orchestrator import Engine, PlanError, Request
from .service import error_response, query_response

EXIT_OK = 0
EXIT_PIPELINE = 2
EXIT_INPUT = 3

# Argument/usage problems are input errors (exit 3), not pipeline errors.
click.UsageError.exit_code = EXIT_INPUT


def _engine_options(fn):
    fn = click.option(
        "--kb",
        envvar="ATGT_KB_FILE",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Knowledge base triples file (env ATGT_KB_FILE).",
    )(fn)
    fn = click.option(
        "--mapping",
        envvar="ATGT_MAPPING_FILE",
        type=click.Path(exists=True, dir_okay=False),
        default="config/mapping.json",
        show_default=True,
        help="Class-to-path mapping config (env ATGT_MAPPING_FILE).",
    )(fn)
    fn = click.option(
        "--ontology",
        envvar="ATGT_ONTOLOGY_FILE",
        type=click.Path(exists=True, dir_okay=False),
        default="config/ontology.json",
        show_default=True,
        help="Ontology declaration file (env ATGT_ONTOLOGY_FILE).",
    )(fn)
    fn = click.option(
        "--mock-llm",
        is_flag=True,
        help="Use the scripted completion provider instead of a remote model.",
    )(fn)
    fn = click.option(
        "--llm-fixtures",
        envvar="ATGT_LLM_FIXTURES",
        type=click.Path(exists=True, file_okay=False),
        default="fixtures/llm",
        show_default=True,
        help="Scripted-provider fixture directory.",
    )(fn)
    fn = click.option(
        "--server",
        envvar="ATGT_SERVER",
        default=None,
        help="Run against a running service at this base URL instead of embedded.",
    )(fn)
    return fn


def _build_engine(kb, mapping, ontology, mock_llm, llm_fixtures) -> Engine:
    if mock_llm:
        provider = ScriptedProvider.from_dir(llm_fixtures)
    else:
        try:
            provider = HttpProvider()
        except ProviderError as exc:
            raise click.ClickException(f"{exc} (or pass --mock-llm)") from exc
    try:
        return Engine.create(
            provider, kb_file=kb, mapping_file=mapping, ontology_file=ontology
        )
    except (OSError, ValueError) as exc:
        _fail_input(str(exc))


def _fail_input(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_INPUT)


def _fail_pipeline(message: str) -> None:
    click.echo(f"pipeline error: {message}", err=True)
    sys.exit(EXIT_PIPELINE)


def _http(server: str, method: str, path: str, **kwargs):
    import httpx

    try:
        response = httpx.request(method, server.rstrip("/") + path, **kwargs)
    except httpx.HTTPError as exc:
        _fail_input(f"cannot reach server: {exc}")
    return response


@click.group()
@click.version_option(package_name="audiencectl")
def main() -> None:
    """Explainable natural-language audience targeting."""


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@_engine_options
def load(file, kb, mapping, ontology, mock_llm, llm_fixtures, server) -> None:
    """Validate and ingest a triples FILE (embedded) or POST it to --server."""
    text = Path(file).read_text()
    if server:
        response = _http(
            server,
            "POST",
            "/v1/kb/triples",
            content=text.encode("utf-8"),
            headers={"content-type": "text/plain; charset=utf-8"},
        )
        if response.status_code != 200:
            _fail_input(f"server rejected document: {response.text}")
        click.echo(json.dumps(response.json()))
        return
    # FILE is the knowledge base here; --kb would only duplicate it.
    engine = _build_engine(None, mapping, ontology, True, llm_fixtures)
    try:
        report = engine.load_document(text)
    except TripleSyntaxError as exc:
        _fail_input(str(exc))
    click.echo(json.dumps({"count": report.count, "storeSeq": engine.store.seq}))


@main.command()
@click.argument("statement", required=False)
@click.option(
    "--formal",
    "formal_file",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Submit a jVQL document file as a formal query instead of a statement.",
)
@click.option("--expand-hierarchy", is_flag=True, help="Expand title hierarchies.")
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["text", "jvql", "sparql", "full"]),
    default="text",
    show_default=True,
)
@click.option("--limit", type=int, default=None, help="Cap the audience list length.")
@_engine_options
def query(
    statement,
    formal_file,
    expand_hierarchy,
    output_format,
    limit,
    kb,
    mapping,
    ontology,
    mock_llm,
    llm_fixtures,
    server,
) -> None:
    """Run a natural-language STATEMENT (or --formal jVQL file) through the pipeline."""
    if (statement is None) == (formal_file is None):
        _fail_input("pass exactly one of STATEMENT or --formal <jvql-file>")

    if formal_file is not None:
        try:
            jvql_doc = json.loads(Path(formal_file).read_text())
        except json.JSONDecodeError as exc:
            _fail_input(f"invalid jVQL JSON: {exc}")
        body = {"kind": "formal-query", "jvql": jvql_doc}
    else:
        body = {"kind": "nl-query", "statement": statement}
    body["options"] = {"expandHierarchy": expand_hierarchy, "resultLimit": limit}

    if server:
        response = _http(server, "POST", "/v1/queries", json=body)
        if response.status_code == 400:
            _fail_input(response.text)
        payload = response.json()
        if response.status_code == 422:
            _emit_pipeline_error(payload["error"])
        _emit_query(payload, output_format)
        return

    engine = _build_engine(kb, mapping, ontology, mock_llm, llm_fixtures)
    request = Request(
        kind="formal-query" if formal_file else "nl-query",
        statement=statement,
        jvql=body.get("jvql"),
        expand_hierarchy=expand_hierarchy,
        result_limit=limit,
    )
    try:
        result = engine.query(request)
    except PlanError as exc:
        _fail_input(str(exc))
    if result.error is not None:
        _emit_pipeline_error(error_response(result)["error"])
    _emit_query(query_response(result), output_format)


def _emit_pipeline_error(error: dict) -> None:
    message = f"step {error['step']}: {error['message']}"
    if error.get("candidates"):
        names = ", ".join(
            f"{c['label']} ({c['score']:.2f})" for c in error["candidates"]
        )
        message += f"; candidates: {names}"
    _fail_pipeline(message)


def _emit_query(payload: dict, output_format: str) -> None:
    if output_format == "full":
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    elif output_format == "jvql":
        click.echo(json.dumps(payload["jvql"], indent=2))
    elif output_format == "sparql":
        click.echo(payload["sparql"])
    else:
        click.echo(payload["booleanExpression"])
        click.echo()
        audience = payload["audience"]
        click.echo(f"Audience ({audience['total']}):")
        for person in audience["persons"]:
            branches = (
                f"  [{'; '.join(person['matchedBranches'])}]"
                if person["matchedBranches"]
                else ""
            )
            click.echo(f"  {person['name']} <{person['iri']}>{branches}")
        click.echo()
        click.echo(payload["explanation"]["text"])


@main.command()
@click.argument("q")
@click.option("-k", type=int, default=10, show_default=True)
@click.option("--class", "class_iri", default=None, help="Restrict to one class IRI.")
@_engine_options
def entities(q, k, class_iri, kb, mapping, ontology, mock_llm, llm_fixtures, server) -> None:
    """Search entity labels for Q."""
    if server:
        params = {"q": q, "k": k}
        if class_iri:
            params["class"] = class_iri
        response = _http(server, "GET", "/v1/entities", params=params)
        if response.status_code != 200:
            _fail_input(response.text)
        matches = response.json()["matches"]
    else:
        engine = _build_engine(kb, mapping, ontology, True, llm_fixtures)
        try:
            found = engine.search(q, k, class_iri=class_iri)
        except ValueError as exc:
            _fail_input(str(exc))
        matches = [
            {
                "label": m.entity.primary_label,
                "classIri": m.entity.class_iri.value,
                "entityIri": m.entity.iri.value,
                "score": m.score,
            }
            for m in found
        ]
    for m in matches:
        class_name = m["classIri"].rsplit("/", 1)[-1]
        click.echo(f"{m['score']:.3f}  {m['label']}  [{class_name}]  {m['entityIri']}")


@main.command()
@click.argument("plan_id")
@_engine_options
def plan(plan_id, kb, mapping, ontology, mock_llm, llm_fixtures, server) -> None:
    """Fetch a stored plan's step records and explanation from --server."""
    if not server:
        _fail_input(
            "plan retrieval needs a running service: pass --server or set ATGT_SERVER "
            "(plans live in server memory only)"
        )
    response = _http(server, "GET", f"/v1/plans/{plan_id}")
    if response.status_code == 404:
        _fail_input(f"unknown plan {plan_id}")
    if response.status_code != 200:
        _fail_input(response.text)
    click.echo(json.dumps(response.json(), indent=2, sort_keys=True))


@main.command()
@click.option(
    "--listen",
    envvar="ATGT_LISTEN_ADDR",
    default="127.0.0.1:8710",
    show_default=True,
    help="host:port to bind (env ATGT_LISTEN_ADDR).",
)
@_engine_options
def serve(listen, kb, mapping, ontology, mock_llm, llm_fixtures, server) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    if server:
        _fail_input("serve runs locally; --server does not apply")
    engine = _build_engine(kb, mapping, ontology, mock_llm, llm_fixtures)
    host, _, port = listen.partition(":")
    uvicorn.run(create_app(engine), host=host or "127.0.0.1", port=int(port or 8710))


if __name__ == "__main__":
    main()
