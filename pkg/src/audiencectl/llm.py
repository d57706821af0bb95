"""Provider-agnostic text generation plus the two LLM workflows.

The NER workflow marks key terms with fixed <term> markers and re-extracts
them by regex; the formal-query workflow returns a fenced structured document
holding a reasoning breakdown and a Boolean expression over the given terms.
Both validate the completion and retry once with a corrective suffix.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .boolexpr import ExprSyntaxError, TermExpr, leaves, parse_term_expr

TAG_OPEN = "<term>"
TAG_CLOSE = "</term>"
_TERM_RE = re.compile(r"<term>(.+?)</term>", re.DOTALL)
_WS_RE = re.compile(r"\s+")


class ProviderError(RuntimeError):
    """Completion provider failure (timeout, remote error, bad config)."""


class ScriptedMissError(ProviderError):
    """No scripted completion recorded for this prompt digest."""

    def __init__(self, digest: str) -> None:
        super().__init__(f"no scripted completion for prompt digest {digest}")
        self.digest = digest


class TagConsistencyError(ValueError):
    """NER output failed the detag-identity check even after a retry."""


class ZeroTermsError(ValueError):
    """NER output contained no marked terms."""


class OutputFormatError(ValueError):
    """FQF output could not be parsed even after a retry."""


class LeafConstraintError(ValueError):
    """FQF expression used a leaf outside the provided terms."""


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int = 1024
    temperature: float = 0.0
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


class CompletionProvider(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ScriptedProvider:
    """Deterministic completions keyed by prompt digest."""

    def __init__(self, completions: dict[str, str] | None = None) -> None:
        self.completions = dict(completions or {})

    @classmethod
    def from_dir(cls, directory: str | Path) -> ScriptedProvider:
        completions = {}
        for path in sorted(Path(directory).glob("*.json")):
            record = json.loads(path.read_text())
            completions[record["digest"]] = record["completion"]
        return cls(completions)

    def add(self, prompt: str, completion: str) -> None:
        self.completions[prompt_digest(prompt)] = completion

    def complete(self, request: CompletionRequest) -> str:
        digest = prompt_digest(request.prompt)
        if digest not in self.completions:
            raise ScriptedMissError(digest)
        return self.completions[digest]


class ReplayProvider:
    """Record-and-replay wrapper: one JSON file per prompt digest.

    In record mode a miss is forwarded to the inner provider and the
    completion stored; otherwise a miss raises like the scripted provider.
    """

    def __init__(
        self,
        directory: str | Path,
        inner: CompletionProvider | None = None,
        record: bool = False,
    ) -> None:
        self.directory = Path(directory)
        self.inner = inner
        self.record = record

    def complete(self, request: CompletionRequest) -> str:
        digest = prompt_digest(request.prompt)
        path = self.directory / f"{digest}.json"
        if path.exists():
            return json.loads(path.read_text())["completion"]
        if not self.record or self.inner is None:
            raise ScriptedMissError(digest)
        completion = self.inner.complete(request)
        self.directory.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(
                {"digest": digest, "prompt": request.prompt, "completion": completion},
                indent=2,
            )
        )
        return completion


class HttpProvider:
    """Generic JSON-over-HTTP adapter configured from ATGT_LLM_* variables."""

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        token: str | None = None,
        timeout: float = 30.0,
    ) -> None:
        self.endpoint = endpoint or os.environ.get("ATGT_LLM_ENDPOINT", "")
        self.model = model or os.environ.get("ATGT_LLM_MODEL", "")
        self.token = token or os.environ.get("ATGT_LLM_TOKEN", "")
        self.timeout = timeout
        if not self.endpoint:
            raise ProviderError("no LLM endpoint configured (ATGT_LLM_ENDPOINT)")

    def complete(self, request: CompletionRequest) -> str:
        import httpx

        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        body = {
            "model": self.model,
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
            "stop_sequences": list(request.stop_sequences),
        }
        try:
            response = httpx.post(
                self.endpoint, json=body, headers=headers, timeout=self.timeout
            )
        except httpx.HTTPError as exc:
            raise ProviderError(f"provider request failed: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(
                f"provider returned status {response.status_code}: {response.text[:200]}"
            )
        data = response.json()
        if "completion" not in data:
            raise ProviderError("provider response missing 'completion'")
        return data["completion"]


# -- NER workflow -----------------------------------------------------------------

NER_FEWSHOT = [
    (
        "Notify every reliability engineer at APAC sites about the new lockout procedure.",
        "Notify every <term>reliability engineer</term> at <term>APAC sites</term> about the new lockout procedure.",
    ),
    (
        "Reach technicians who service robotic arms from Atlas Dynamics in North America.",
        "Reach <term>technicians</term> who service <term>robotic arms</term> from <term>Atlas Dynamics</term> in <term>North America</term>.",
    ),
    (
        "Send the recall notice to anyone maintaining pallet wrappers of model CB500 outside LATAM.",
        "Send the recall notice to anyone maintaining <term>pallet wrappers</term> of model <term>CB500</term> outside <term>LATAM</term>.",
    ),
]

NER_RETRY_SUFFIX = (
    "\n\nYour previous answer changed the statement outside the markers or "
    "marked nothing. Repeat the statement exactly, only inserting <term> and "
    "</term> around the key terms."
)


def build_ner_prompt(statement: str) -> str:
    lines = [
        "Mark the key terms in an audience-targeting statement.",
        "Key terms are the role, location, site, equipment, model, and",
        "manufacturer mentions that name entities in the maintenance knowledge base.",
        f"Wrap each key term in {TAG_OPEN} and {TAG_CLOSE}. Repeat the statement",
        "exactly; change nothing outside the markers.",
        "",
    ]
    for statement_example, tagged_example in NER_FEWSHOT:
        lines.append(f"Statement: {statement_example}")
        lines.append(f"Tagged: {tagged_example}")
        lines.append("")
    lines.append(f"Statement: {statement}")
    lines.append("Tagged:")
    return "\n".join(lines)


@dataclass(frozen=True)
class TaggedStatement:
    original: str
    tagged: str
    terms: tuple[tuple[str, tuple[int, int]], ...] = field(default_factory=tuple)

    @property
    def term_texts(self) -> list[str]:
        return [term for term, _ in self.terms]


def _normalize_ws(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def strip_tags(tagged: str) -> str:
    return tagged.replace(TAG_OPEN, "").replace(TAG_CLOSE, "")


def _locate_terms(
    original: str, terms: list[str]
) -> tuple[tuple[str, tuple[int, int]], ...]:
    """Find each term's span in order; whitespace inside a term is elastic."""
    spans: list[tuple[str, tuple[int, int]]] = []
    cursor = 0
    for term in terms:
        pattern = r"\s+".join(re.escape(tok) for tok in term.split())
        if not pattern:
            raise TagConsistencyError("empty term inside markers")
        m = re.compile(pattern).search(original, cursor)
        if not m:
            raise TagConsistencyError(
                f"term {term!r} is not a substring of the statement in tag order"
            )
        spans.append((original[m.start() : m.end()], (m.start(), m.end())))
        cursor = m.end()
    return tuple(spans)


def _parse_tagged(original: str, completion: str) -> TaggedStatement:
    tagged = completion.strip()
    if _normalize_ws(strip_tags(tagged)) != _normalize_ws(original):
        raise TagConsistencyError(
            "detagged completion does not reproduce the statement"
        )
    terms = _TERM_RE.findall(tagged)
    if not terms:
        raise ZeroTermsError("no key terms were marked in the statement")
    spans = _locate_terms(original, terms)
    return TaggedStatement(original=original, tagged=tagged, terms=spans)


def ner_tag(statement: str, provider: CompletionProvider) -> TaggedStatement:
    """Mark key terms via the provider; one corrective retry on tag damage."""
    if not statement.strip():
        raise ValueError("statement must be non-empty")
    prompt = build_ner_prompt(statement)
    completion = provider.complete(CompletionRequest(prompt=prompt))
    try:
        return _parse_tagged(statement, completion)
    except TagConsistencyError:
        retry = provider.complete(CompletionRequest(prompt=prompt + NER_RETRY_SUFFIX))
        return _parse_tagged(statement, retry)


# -- FQF workflow -----------------------------------------------------------------

FQF_FEWSHOT = [
    (
        "Notify every reliability engineer at APAC sites about the new lockout procedure.",
        ["reliability engineer", "APAC sites"],
        [
            "The audience is one role: reliability engineer.",
            "The role is restricted to one location: APAC sites.",
            "Both constraints must hold together, so they combine with AND.",
        ],
        '"reliability engineer" AND "APAC sites"',
    ),
    (
        "Reach technicians who service robotic arms from Atlas Dynamics in North America.",
        ["technicians", "robotic arms", "Atlas Dynamics", "North America"],
        [
            "The audience is the technicians role.",
            "They must service robotic arms made by Atlas Dynamics.",
            "They must be located in North America.",
            "All four constraints apply at once, so everything combines with AND.",
        ],
        '"technicians" AND "robotic arms" AND "Atlas Dynamics" AND "North America"',
    ),
    (
        "Send the recall notice to anyone maintaining pallet wrappers of model CB500 outside LATAM.",
        ["pallet wrappers", "CB500", "LATAM"],
        [
            "The audience maintains pallet wrappers of model CB500; both must hold.",
            "The phrase 'outside LATAM' excludes the LATAM location, which is a NOT.",
            "The equipment constraints combine with AND, then AND NOT LATAM.",
        ],
        '"pallet wrappers" AND "CB500" AND NOT "LATAM"',
    ),
]

FQF_RETRY_SUFFIX = (
    "\n\nYour previous answer was not a valid fqf block or used a term that "
    "was not provided. Reply with exactly one ```fqf block; the expression "
    "may only quote the provided key terms."
)

_FQF_BLOCK_RE = re.compile(r"```fqf\s*\n(.*?)```", re.DOTALL)


def _fqf_block(reasoning: list[str], expression: str) -> str:
    lines = ["```fqf", "reasoning:"]
    lines.extend(f"- {step}" for step in reasoning)
    lines.append(f"expression: {expression}")
    lines.append("```")
    return "\n".join(lines)


def build_fqf_prompt(statement: str, terms: list[str]) -> str:
    term_list = ", ".join(f'"{t}"' for t in terms)
    lines = [
        "Express an audience-targeting statement as a Boolean algebra",
        "expression over the given key terms.",
        "Allowed operators: AND, OR, NOT, parentheses. Leaves are the key",
        "terms, double-quoted, exactly as given; use every constraint the",
        "statement states and nothing else.",
        "Reply with one ```fqf block: a reasoning list (one '- ' line per",
        "step) followed by one 'expression:' line.",
        "",
    ]
    for example_statement, example_terms, example_reasoning, example_expr in FQF_FEWSHOT:
        example_list = ", ".join(f'"{t}"' for t in example_terms)
        lines.append(f"Statement: {example_statement}")
        lines.append(f"Key terms: {example_list}")
        lines.append(_fqf_block(example_reasoning, example_expr))
        lines.append("")
    lines.append(f"Statement: {statement}")
    lines.append(f"Key terms: {term_list}")
    return "\n".join(lines)


@dataclass(frozen=True)
class FqfOutput:
    reasoning: tuple[str, ...]
    expression_text: str

    def parse(self) -> TermExpr:
        return parse_term_expr(self.expression_text)


def _parse_fqf(completion: str, terms: list[str]) -> FqfOutput:
    m = _FQF_BLOCK_RE.search(completion)
    if not m:
        raise OutputFormatError("completion contains no ```fqf block")
    body = m.group(1)
    reasoning: list[str] = []
    expression: str | None = None
    for line in body.splitlines():
        stripped = line.strip()
        if stripped.startswith("- "):
            reasoning.append(stripped[2:].strip())
        elif stripped.startswith("expression:"):
            expression = stripped[len("expression:") :].strip()
    if expression is None:
        raise OutputFormatError("fqf block has no 'expression:' line")
    if not reasoning:
        raise OutputFormatError("fqf block has no reasoning steps")
    try:
        expr = parse_term_expr(expression)
    except ExprSyntaxError as exc:
        raise OutputFormatError(f"expression does not parse: {exc}") from exc
    allowed = set(terms)
    for leaf in leaves(expr):
        if leaf.term not in allowed:  # type: ignore[union-attr]
            raise LeafConstraintError(
                f"expression leaf {leaf.term!r} is not one of the provided terms"  # type: ignore[union-attr]
            )
    return FqfOutput(reasoning=tuple(reasoning), expression_text=expression)


def fqf_formulate(
    statement: str, terms: list[str], provider: CompletionProvider
) -> FqfOutput:
    """Formulate the Boolean expression; one corrective retry on bad output."""
    if not terms:
        raise ValueError("terms must be non-empty")
    prompt = build_fqf_prompt(statement, terms)
    completion = provider.complete(CompletionRequest(prompt=prompt))
    try:
        return _parse_fqf(completion, terms)
    except (OutputFormatError, LeafConstraintError):
        retry = provider.complete(CompletionRequest(prompt=prompt + FQF_RETRY_SUFFIX))
        return _parse_fqf(retry, terms)
