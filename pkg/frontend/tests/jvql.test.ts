import { describe, expect, it } from "vitest";

import {
  JvqlDocument,
  addChildAt,
  deleteBlockedReason,
  deleteNodeAt,
  emptyPredicate,
  localName,
  nodeAt,
  replaceNodeAt,
  validateDocument,
} from "../src/jvql.js";

const ONT = "http://info.rme.amazon.dev/ontology/";
const ENT = "http://info.rme.amazon.dev/entity/";

function pred(className: string, entity: string) {
  return {
    kind: "predicate" as const,
    classIri: ONT + className,
    entityIri: ENT + entity,
    label: entity,
  };
}

function exampleDoc(): JvqlDocument {
  return {
    version: "1",
    root: {
      kind: "and",
      children: [
        pred("JobTitle", "MaintenanceTechnician"),
        pred("Region", "EU"),
        { kind: "or", children: [pred("Equipment", "ConveyorBelt"), pred("EquipmentModel", "FA123")] },
      ],
    },
  };
}

describe("validateDocument", () => {
  it("accepts the example tree", () => {
    expect(validateDocument(exampleDoc())).toEqual([]);
  });

  it("rejects a null buffer and wrong versions", () => {
    expect(validateDocument(null)).toHaveLength(1);
    const doc = exampleDoc();
    (doc as { version: string }).version = "2";
    expect(validateDocument(doc)[0]).toMatch(/version/);
  });

  it("rejects arity violations", () => {
    const doc = exampleDoc();
    (doc.root as { children: unknown[] }).children = [pred("Region", "EU")];
    expect(validateDocument(doc)[0]).toMatch(/at least 2 children/);
  });

  it("rejects unset predicates, so fresh placeholders block submission", () => {
    const doc = addChildAt(exampleDoc(), [], emptyPredicate());
    const problems = validateDocument(doc);
    expect(problems).toHaveLength(2); // class and entity both unset
    expect(problems.join(" ")).toMatch(/pick one via search/);
  });

  it("rejects NOT without a child", () => {
    const doc: JvqlDocument = {
      version: "1",
      root: { kind: "not", child: undefined as never },
    };
    expect(validateDocument(doc)[0]).toMatch(/NOT/);
  });
});

describe("tree edits", () => {
  it("replaces a nested predicate immutably", () => {
    const doc = exampleDoc();
    const edited = replaceNodeAt(doc, [2, 0], pred("Equipment", "RoboticArm"));
    expect(nodeAt(edited, [2, 0])).toMatchObject({ entityIri: ENT + "RoboticArm" });
    expect(nodeAt(doc, [2, 0])).toMatchObject({ entityIri: ENT + "ConveyorBelt" });
  });

  it("blocks deletions that would break arity", () => {
    const doc = exampleDoc();
    expect(deleteBlockedReason(doc, [2, 0])).toMatch(/OR needs at least 2/);
    expect(deleteBlockedReason(doc, [])).toMatch(/root/);
    expect(() => deleteNodeAt(doc, [2, 1])).toThrow(/at least 2/);
  });

  it("allows deletion from a 3-child AND", () => {
    const doc = exampleDoc();
    expect(deleteBlockedReason(doc, [1])).toBeNull();
    const edited = deleteNodeAt(doc, [1]);
    expect((edited.root as { children: unknown[] }).children).toHaveLength(2);
    expect(validateDocument(edited)).toEqual([]);
  });

  it("adds children only to and/or nodes", () => {
    const doc = exampleDoc();
    const grown = addChildAt(doc, [2], pred("EquipmentModel", "CB500"));
    expect((nodeAt(grown, [2]) as { children: unknown[] }).children).toHaveLength(3);
    expect(() => addChildAt(doc, [0], pred("Region", "EU"))).toThrow(/AND\/OR/);
  });

  it("localName strips namespaces", () => {
    expect(localName(ENT + "FA123")).toBe("FA123");
    expect(localName("urn:thing#frag")).toBe("frag");
  });
});
