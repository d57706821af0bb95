// jVQL document model: the editable tree mirror of the Boolean query.
// Client-side validation mirrors the server's from_jvql rules so that any
// tree the editor lets through is accepted by the API.

export interface PredicateNode {
  kind: "predicate";
  classIri: string;
  entityIri: string;
  label?: string;
  matchedTerm?: string;
  linkScore?: number;
}

export interface AndOrNode {
  kind: "and" | "or";
  children: JvqlNode[];
}

export interface NotNode {
  kind: "not";
  child: JvqlNode;
}

export type JvqlNode = PredicateNode | AndOrNode | NotNode;

export interface JvqlDocument {
  version: "1";
  root: JvqlNode;
}

/** Path from the root: child indexes; a not-node's child is index 0. */
export type NodePath = number[];

const ABSOLUTE_IRI = /^[A-Za-z][A-Za-z0-9+.-]*:\S+$/;

export function validateDocument(doc: JvqlDocument | null): string[] {
  if (doc === null) return ["no query tree to submit"];
  const problems: string[] = [];
  if (doc.version !== "1") problems.push(`unsupported version ${String(doc.version)}`);
  if (!doc.root) {
    problems.push("document has no root node");
    return problems;
  }
  validateNode(doc.root, "root", problems);
  return problems;
}

function validateNode(node: JvqlNode, where: string, problems: string[]): void {
  if (node.kind === "predicate") {
    if (!ABSOLUTE_IRI.test(node.classIri ?? "")) {
      problems.push(`${where}: predicate needs an absolute class IRI`);
    }
    if (!ABSOLUTE_IRI.test(node.entityIri ?? "")) {
      problems.push(`${where}: predicate needs an entity (pick one via search)`);
    }
    return;
  }
  if (node.kind === "not") {
    if (!node.child) {
      problems.push(`${where}: NOT needs exactly one child`);
      return;
    }
    validateNode(node.child, `${where}/not`, problems);
    return;
  }
  if (node.kind === "and" || node.kind === "or") {
    if (!Array.isArray(node.children) || node.children.length < 2) {
      problems.push(`${where}: ${node.kind.toUpperCase()} needs at least 2 children`);
    }
    (node.children ?? []).forEach((child, i) =>
      validateNode(child, `${where}/${node.kind}[${i}]`, problems),
    );
    return;
  }
  problems.push(`${where}: unknown node kind`);
}

export function cloneDocument(doc: JvqlDocument): JvqlDocument {
  return JSON.parse(JSON.stringify(doc)) as JvqlDocument;
}

export function nodeAt(doc: JvqlDocument, path: NodePath): JvqlNode {
  let node = doc.root;
  for (const index of path) {
    if (node.kind === "not") {
      if (index !== 0) throw new Error(`bad path step ${index} at a NOT node`);
      node = node.child;
    } else if (node.kind === "and" || node.kind === "or") {
      const child = node.children[index];
      if (!child) throw new Error(`bad path step ${index}`);
      node = child;
    } else {
      throw new Error("path descends below a predicate");
    }
  }
  return node;
}

export function replaceNodeAt(
  doc: JvqlDocument,
  path: NodePath,
  replacement: JvqlNode,
): JvqlDocument {
  const copy = cloneDocument(doc);
  if (path.length === 0) {
    copy.root = replacement;
    return copy;
  }
  const parent = nodeAt(copy, path.slice(0, -1));
  const last = path[path.length - 1];
  if (parent.kind === "not") {
    parent.child = replacement;
  } else if (parent.kind === "and" || parent.kind === "or") {
    parent.children[last] = replacement;
  } else {
    throw new Error("cannot replace below a predicate");
  }
  return copy;
}

/** Why a node cannot be deleted, or null when deletion is allowed. */
export function deleteBlockedReason(doc: JvqlDocument, path: NodePath): string | null {
  if (path.length === 0) return "cannot delete the root of the query";
  const parent = nodeAt(doc, path.slice(0, -1));
  if (parent.kind === "not") {
    return "a NOT needs its child; delete the NOT instead";
  }
  if ((parent.kind === "and" || parent.kind === "or") && parent.children.length <= 2) {
    return `${parent.kind.toUpperCase()} needs at least 2 children`;
  }
  return null;
}

export function deleteNodeAt(doc: JvqlDocument, path: NodePath): JvqlDocument {
  const reason = deleteBlockedReason(doc, path);
  if (reason) throw new Error(reason);
  const copy = cloneDocument(doc);
  const parent = nodeAt(copy, path.slice(0, -1)) as AndOrNode;
  parent.children.splice(path[path.length - 1], 1);
  return copy;
}

/** Append a child to an AND/OR node (new predicates start unset and invalid). */
export function addChildAt(
  doc: JvqlDocument,
  path: NodePath,
  child: JvqlNode,
): JvqlDocument {
  const copy = cloneDocument(doc);
  const target = nodeAt(copy, path);
  if (target.kind !== "and" && target.kind !== "or") {
    throw new Error("children can only be added to AND/OR nodes");
  }
  target.children.push(child);
  return copy;
}

export function emptyPredicate(): PredicateNode {
  return { kind: "predicate", classIri: "", entityIri: "", label: "(choose an entity)" };
}

export function localName(iri: string): string {
  const cut = Math.max(iri.lastIndexOf("/"), iri.lastIndexOf("#"));
  return cut >= 0 ? iri.slice(cut + 1) : iri;
}
