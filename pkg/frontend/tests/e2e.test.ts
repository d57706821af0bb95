// @vitest-environment jsdom
//
// End-to-end: spawns the actual audiencectl HTTP service (scripted LLM,
// fixture KB) and drives the console's full loop against it over real HTTP:
// submit the example statement, check the rendered tree and audience, swap
// one predicate through entity search, resubmit, and watch the audience and
// caveats change.

import { spawn, type ChildProcess } from "node:child_process";
import { dirname, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { Renderer } from "../src/render.js";
import { Session } from "../src/session.js";

const REPO_ROOT = resolve(dirname(fileURLToPath(import.meta.url)), "..", "..");
const PORT = 8899;
const BASE = `http://127.0.0.1:${PORT}`;
const EXAMPLE_STATEMENT =
  "I want to reach out to all maintenance technicians working with " +
  "Vendor X's conveyor belts or fire alarms of model FA123 at European sites";

let server: ChildProcess;

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/v1/entities?q=FA123`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((r) => setTimeout(r, 250));
  }
}

beforeAll(async () => {
  server = spawn(
    "python3",
    [
      "-m",
      "audiencectl.cli",
      "serve",
      "--mock-llm",
      "--kb",
      "fixtures/rme_kb.nt",
      "--mapping",
      "config/mapping.json",
      "--ontology",
      "config/ontology.json",
      "--llm-fixtures",
      "fixtures/llm",
      "--listen",
      `127.0.0.1:${PORT}`,
    ],
    { cwd: REPO_ROOT, stdio: "ignore" },
  );
  await waitForServer();
}, 45_000);

afterAll(() => {
  server?.kill();
});

function mount() {
  document.body.innerHTML = '<main id="app"></main>';
  const root = document.querySelector<HTMLElement>("#app")!;
  const api = new ApiClient(BASE);
  const session = new Session(api);
  const renderer = new Renderer(root, session, api);
  renderer.render(session.state);
  return { root, session };
}

function audienceNames(root: HTMLElement): string[] {
  return [...root.querySelectorAll("#audience tbody tr td:first-child")].map(
    (td) => td.textContent ?? "",
  );
}

describe("console against the live service", () => {
  it(
    "runs the full validate-and-refine loop",
    async () => {
      const { root } = mount();

      // type the statement and submit through the DOM
      const input = root.querySelector<HTMLInputElement>("#statement")!;
      input.value = EXAMPLE_STATEMENT;
      input.dispatchEvent(new Event("input"));
      root.querySelector<HTMLButtonElement>("#submit")!.click();
      await vi.waitFor(
        () => {
          if (!document.querySelector("#expression")) throw new Error("no result yet");
        },
        { timeout: 15_000 },
      );

      // the rendered formal query is the canonical listing
      expect(document.querySelector("#expression")!.textContent).toContain(
        "class:JobTitle ( entity:MaintenanceTechnician ) AND class:Region ( entity:EU )",
      );

      // AND-rooted tree with a nested OR of two predicates
      const rootNode = document.querySelector("#tree > li")!;
      expect(rootNode.classList.contains("op-and")).toBe(true);
      const nestedOr = rootNode.querySelector(":scope > ul > li.op-or")!;
      expect(nestedOr).not.toBeNull();
      expect(nestedOr.querySelectorAll("li.predicate")).toHaveLength(2);

      // audience table straight from the API
      expect(audienceNames(document.body)).toEqual([
        "Alice Okafor",
        "Bruno Keller",
        "Carmen Ruiz",
        "Daniela Rossi",
      ]);

      // per-step explanation timeline
      const steps = [...document.querySelectorAll("#timeline .step")].map((li) =>
        li.getAttribute("data-step"),
      );
      expect(steps).toEqual(["NER", "LINK", "FQF", "AUGMENT", "COMPILE", "EXECUTE", "EXPLAIN"]);
      expect(document.querySelector("#caveats")!.textContent).toContain(
        "Hierarchy expansion OFF",
      );

      // swap the ConveyorBelt predicate for RoboticArm via live entity search
      const predicate = document.querySelector('li[data-path="2.0"]')!;
      expect(predicate.getAttribute("data-entity")).toContain("ConveyorBelt");
      const search = predicate.querySelector<HTMLInputElement>(".entity-search")!;
      search.value = "robotic arm";
      search.dispatchEvent(new Event("input"));
      predicate.querySelector<HTMLButtonElement>(".do-search")!.click();
      await vi.waitFor(
        () => {
          if (!document.querySelector('li[data-path="2.0"] .apply-entity')) {
            throw new Error("no search results yet");
          }
        },
        { timeout: 15_000 },
      );
      document
        .querySelector<HTMLButtonElement>('li[data-path="2.0"] .apply-entity')!
        .click();
      expect(
        document.querySelector('li[data-path="2.0"]')!.getAttribute("data-entity"),
      ).toContain("RoboticArm");

      // resubmit the edited tree as a formal query: audience updates
      const resubmit = document.querySelector<HTMLButtonElement>("#resubmit")!;
      expect(resubmit.disabled).toBe(false);
      resubmit.click();
      await vi.waitFor(
        () => {
          if (audienceNames(document.body).length !== 2) {
            throw new Error("audience not updated yet");
          }
        },
        { timeout: 15_000 },
      );
      // only the FA123 branch members remain (no one in the EU maintains robotic arms)
      expect(audienceNames(document.body)).toEqual(["Carmen Ruiz", "Daniela Rossi"]);
      expect(document.querySelector("#caveats")!.textContent).toContain(
        "formal jVQL document",
      );
      expect(document.getElementById("edited-flag")).not.toBeNull();

      // toggling hierarchy expansion changes the caveat on the next run
      const expand = document.querySelector<HTMLInputElement>("#expand")!;
      expand.checked = true;
      expand.dispatchEvent(new Event("change"));
      document.querySelector<HTMLButtonElement>("#resubmit")!.click();
      await vi.waitFor(
        () => {
          if (
            !document
              .querySelector("#caveats")!
              .textContent!.includes("Hierarchy expansion ON")
          ) {
            throw new Error("caveat not updated yet");
          }
        },
        { timeout: 15_000 },
      );
    },
    90_000,
  );

  it(
    "shows the candidate picker for unlinkable statements",
    async () => {
      const { root } = mount();
      const input = root.querySelector<HTMLInputElement>("#statement")!;
      input.value = "Alert the crew responsible for ancient fire suppression valves";
      input.dispatchEvent(new Event("input"));
      root.querySelector<HTMLButtonElement>("#submit")!.click();
      await vi.waitFor(
        () => {
          if (!document.querySelector("#picker")) throw new Error("no picker yet");
        },
        { timeout: 15_000 },
      );
      expect(document.querySelector("#error")!.textContent).toContain("Step LINK failed");
      const candidate = document.querySelector<HTMLButtonElement>("#picker .candidate")!;
      expect(candidate.textContent).toContain("Fire Alarm");

      // picking a candidate seeds a valid single-predicate formal query
      candidate.click();
      expect(document.querySelector<HTMLButtonElement>("#resubmit")!.disabled).toBe(false);
      document.querySelector<HTMLButtonElement>("#resubmit")!.click();
      await vi.waitFor(
        () => {
          if (!document.querySelector("#audience")) throw new Error("no audience yet");
        },
        { timeout: 15_000 },
      );
      // everyone maintaining a fire-alarm asset, straight from the live KB
      expect(audienceNames(document.body)).toEqual([
        "Carmen Ruiz",
        "Daniela Rossi",
        "Grace Li",
        "Leo Martin",
        "Olga Petrova",
      ]);
    },
    60_000,
  );
});
