// DOM rendering. The whole app is redrawn from SessionState on every change;
// transient per-node search results live in the renderer, keyed by tree path.

import type { ApiClient, EntityMatch } from "./api.js";
import {
  JvqlNode,
  NodePath,
  addChildAt,
  deleteBlockedReason,
  deleteNodeAt,
  emptyPredicate,
  localName,
  replaceNodeAt,
} from "./jvql.js";
import type { Session, SessionState } from "./session.js";

interface NodeSearch {
  query: string;
  results: EntityMatch[];
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

export class Renderer {
  private searchState = new Map<string, NodeSearch>();
  private renderedPlanId: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly session: Session,
    private readonly api: ApiClient,
  ) {
    session.onChange = (state) => this.render(state);
  }

  render(state: SessionState): void {
    if (state.latest?.planId !== this.renderedPlanId) {
      this.searchState.clear();
      this.renderedPlanId = state.latest?.planId ?? null;
    }
    this.root.replaceChildren(
      this.renderForm(state),
      this.renderError(state),
      this.renderResult(state),
    );
  }

  // -- statement form ---------------------------------------------------------

  private renderForm(state: SessionState): HTMLElement {
    const input = el("input", {
      id: "statement",
      type: "text",
      placeholder: "e.g. Notify all managers at European sites",
      value: state.statement,
    });
    input.addEventListener("input", () => this.session.setStatement(input.value));
    input.addEventListener("keydown", (event) => {
      if (event.key === "Enter" && this.session.canSubmitStatement()) {
        void this.session.submitStatement();
      }
    });

    const submit = el("button", { id: "submit" }, state.busy ? "Running…" : "Run query");
    if (!this.session.canSubmitStatement()) submit.setAttribute("disabled", "");
    submit.addEventListener("click", () => void this.session.submitStatement());

    const expand = el("input", { id: "expand", type: "checkbox" });
    (expand as HTMLInputElement).checked = state.expandHierarchy;
    expand.addEventListener("change", () =>
      this.session.toggleHierarchy((expand as HTMLInputElement).checked),
    );

    return el(
      "section",
      { class: "query-form" },
      el("h1", {}, "Audience console"),
      el("div", { class: "row" }, input, submit),
      el("label", { class: "row" }, expand, " include narrower job titles (hierarchy expansion)"),
    );
  }

  // -- pipeline errors and the candidate picker ----------------------------------

  private renderError(state: SessionState): HTMLElement {
    const box = el("section", { id: "error-area" });
    if (state.transportError) {
      box.append(el("p", { id: "transport-error", class: "error" }, state.transportError));
    }
    if (!state.pipelineError) return box;
    const failure = state.pipelineError.error;
    box.append(
      el(
        "p",
        { id: "error", class: "error" },
        `Step ${failure.step} failed: ${failure.message}`,
      ),
    );
    if (state.picker) {
      const picker = el(
        "div",
        { id: "picker" },
        el("p", {}, `Did you mean one of these for '${state.picker.term}'?`),
      );
      for (const candidate of state.picker.candidates) {
        const button = el(
          "button",
          { class: "candidate", "data-entity": candidate.entityIri },
          `${candidate.label} (${localName(candidate.classIri)}, ${candidate.score.toFixed(2)})`,
        );
        button.addEventListener("click", () => this.session.pickCandidate(candidate));
        picker.append(button);
      }
      box.append(picker);
    }
    return box;
  }

  // -- results ----------------------------------------------------------------------

  private renderResult(state: SessionState): HTMLElement {
    const box = el("section", { id: "result-area" });
    if (state.latest) {
      box.append(
        el("h2", {}, "Formal query"),
        el("pre", { id: "expression" }, state.latest.booleanExpression),
      );
    }
    if (state.editBuffer) {
      box.append(el("h2", {}, "Query tree (editable)"), this.renderTree(state));
    }
    if (state.latest) {
      box.append(
        el("h2", {}, "Audience"),
        this.renderAudience(state),
        el("h2", {}, "Explanation"),
        this.renderTimeline(state),
      );
    }
    return box;
  }

  private renderTree(state: SessionState): HTMLElement {
    const container = el("div", { id: "tree-editor" });
    const tree = el("ul", { id: "tree" });
    tree.append(this.renderNode(state.editBuffer!.root, []));
    container.append(tree);

    const problems = el("ul", { id: "edit-problems" });
    for (const problem of state.editProblems) {
      problems.append(el("li", { class: "error" }, problem));
    }
    container.append(problems);

    const resubmit = el("button", { id: "resubmit" }, "Resubmit edited query");
    if (!this.session.canResubmit()) resubmit.setAttribute("disabled", "");
    resubmit.addEventListener("click", () => void this.session.resubmitEdited());
    container.append(resubmit);
    if (state.userEdited) {
      container.append(el("span", { id: "edited-flag" }, " edited"));
    }
    return container;
  }

  private renderNode(node: JvqlNode, path: NodePath): HTMLElement {
    const key = path.join(".");
    if (node.kind === "predicate") {
      const item = el(
        "li",
        { class: "predicate", "data-path": key, "data-entity": node.entityIri },
        el(
          "span",
          { class: "predicate-label" },
          `${node.label ?? localName(node.entityIri)} [${localName(node.classIri) || "?"}]`,
        ),
      );
      item.append(this.renderEntitySwap(path), this.renderDelete(path));
      return item;
    }
    if (node.kind === "not") {
      const item = el("li", { class: "op op-not", "data-path": key }, el("span", {}, "NOT"));
      item.append(this.renderDelete(path));
      item.append(el("ul", {}, this.renderNode(node.child, [...path, 0])));
      return item;
    }
    const item = el(
      "li",
      { class: `op op-${node.kind}`, "data-path": key },
      el("span", {}, node.kind.toUpperCase()),
    );
    const add = el("button", { class: "add-child" }, "+ condition");
    add.addEventListener("click", () =>
      this.session.applyEdit((doc) => addChildAt(doc, path, emptyPredicate())),
    );
    item.append(add, this.renderDelete(path));
    const children = el("ul", {});
    node.children.forEach((child, i) =>
      children.append(this.renderNode(child, [...path, i])),
    );
    item.append(children);
    return item;
  }

  private renderDelete(path: NodePath): HTMLElement {
    const reason = this.session.state.editBuffer
      ? deleteBlockedReason(this.session.state.editBuffer, path)
      : "no tree";
    const button = el("button", { class: "delete-node" }, "delete");
    if (reason) {
      button.setAttribute("disabled", "");
      button.setAttribute("title", reason);
    } else {
      button.addEventListener("click", () =>
        this.session.applyEdit((doc) => deleteNodeAt(doc, path)),
      );
    }
    return button;
  }

  private renderEntitySwap(path: NodePath): HTMLElement {
    const key = path.join(".");
    const search = this.searchState.get(key) ?? { query: "", results: [] };
    const box = el("span", { class: "entity-swap" });

    const input = el("input", {
      class: "entity-search",
      type: "text",
      placeholder: "search entities…",
      value: search.query,
    });
    input.addEventListener("input", () => {
      this.searchState.set(key, { ...search, query: input.value });
    });

    const go = el("button", { class: "do-search" }, "search");
    go.addEventListener("click", () => {
      const query = (input as HTMLInputElement).value;
      void this.api.searchEntities(query).then((results) => {
        this.searchState.set(key, { query, results });
        this.render(this.session.state);
      });
    });

    box.append(input, go);
    if (search.results.length > 0) {
      const select = el("select", { class: "search-results" });
      search.results.forEach((match, i) => {
        select.append(
          el(
            "option",
            { value: String(i) },
            `${match.label} [${localName(match.classIri)}] (${match.score.toFixed(2)})`,
          ),
        );
      });
      const apply = el("button", { class: "apply-entity" }, "use");
      apply.addEventListener("click", () => {
        const picked = search.results[Number((select as HTMLSelectElement).value)];
        this.searchState.delete(key);
        this.session.applyEdit((doc) =>
          replaceNodeAt(doc, path, {
            kind: "predicate",
            classIri: picked.classIri,
            entityIri: picked.entityIri,
            label: picked.label,
          }),
        );
      });
      box.append(select, apply);
    }
    return box;
  }

  private renderAudience(state: SessionState): HTMLElement {
    const audience = state.latest!.audience;
    const table = el(
      "table",
      { id: "audience" },
      el(
        "thead",
        {},
        el("tr", {}, el("th", {}, "Name"), el("th", {}, "Entity"), el("th", {}, "Matched alternatives")),
      ),
    );
    const body = el("tbody", {});
    for (const person of audience.persons) {
      body.append(
        el(
          "tr",
          { class: "person", "data-iri": person.iri },
          el("td", {}, person.name),
          el("td", {}, localName(person.iri)),
          el("td", {}, person.matchedBranches.join("; ")),
        ),
      );
    }
    table.append(
      body,
      el("caption", { id: "audience-total" }, `${audience.total} recipients`),
    );
    return table;
  }

  private renderTimeline(state: SessionState): HTMLElement {
    const explanation = state.latest!.explanation;
    const box = el("div", { id: "explanation" });
    const steps = el("ol", { id: "timeline" });
    for (const section of explanation.sections) {
      const raw = el("pre", { class: "raw-output" }, JSON.stringify(section.outputs, null, 2));
      const details = el(
        "details",
        {},
        el("summary", {}, "raw step output"),
        raw,
      );
      steps.append(
        el(
          "li",
          { class: "step", "data-step": section.name },
          el("strong", {}, section.name),
          el("p", {}, section.narrative),
          details,
        ),
      );
    }
    const caveats = el("ul", { id: "caveats" });
    for (const caveat of explanation.caveats) {
      caveats.append(el("li", { class: "caveat" }, caveat));
    }
    box.append(steps, el("h3", {}, "Caveats"), caveats);
    return box;
  }
}
