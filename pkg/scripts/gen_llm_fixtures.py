#!/usr/bin/env python3
"""Regenerate the scripted-provider fixtures under fixtures/llm/.

Each fixture file is one prompt-digest -> completion record. The flows cover
the full example statement, a corpus of synthetic statements, link-failure
statements, and deliberately corrupted completions that exercise the
one-retry-then-error validation gates.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from audiencectl.llm import (  # noqa: E402
    FQF_RETRY_SUFFIX,
    NER_RETRY_SUFFIX,
    build_fqf_prompt,
    build_ner_prompt,
    prompt_digest,
)

OUT_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "llm"

EXAMPLE_STATEMENT = (
    "I want to reach out to all maintenance technicians working with "
    "Vendor X's conveyor belts or fire alarms of model FA123 at European sites"
)

# (statement, tagged completion, fqf reasoning steps, fqf expression)
GOOD_FLOWS: list[tuple[str, str, list[str], str]] = [
    (
        EXAMPLE_STATEMENT,
        "I want to reach out to all <term>maintenance technicians</term> "
        "working with Vendor X's <term>conveyor belts</term> or fire alarms "
        "of model <term>FA123</term> at <term>European sites</term>",
        [
            "The audience role is maintenance technicians; every recipient must hold it.",
            "The statement restricts recipients to European sites, a second mandatory condition.",
            "The equipment scope is an alternative: conveyor belts or model FA123 join with OR.",
            "The role, the location, and the equipment alternative all apply together with AND.",
        ],
        '"maintenance technicians" AND "European sites" AND ("conveyor belts" OR "FA123")',
    ),
    (
        "Notify all managers at European sites",
        "Notify all <term>managers</term> at <term>European sites</term>",
        [
            "The audience is the managers role.",
            "Recipients are limited to European sites.",
            "Both conditions must hold, so they join with AND.",
        ],
        '"managers" AND "European sites"',
    ),
    (
        "Reach reliability engineers working with sortation systems in APAC",
        "Reach <term>reliability engineers</term> working with "
        "<term>sortation systems</term> in <term>APAC</term>",
        [
            "The audience role is reliability engineers.",
            "They must work with sortation systems.",
            "They must be located in APAC; all three conditions join with AND.",
        ],
        '"reliability engineers" AND "sortation systems" AND "APAC"',
    ),
    (
        "Contact everyone maintaining fire alarms at DUB4",
        "Contact everyone maintaining <term>fire alarms</term> at <term>DUB4</term>",
        [
            "No role is stated, so the audience is anyone maintaining fire alarms.",
            "Recipients are limited to the DUB4 site.",
            "Both conditions join with AND.",
        ],
        '"fire alarms" AND "DUB4"',
    ),
    (
        "Send this to control systems technicians or reliability engineers at MUC3",
        "Send this to <term>control systems technicians</term> or "
        "<term>reliability engineers</term> at <term>MUC3</term>",
        [
            "Two alternative roles are named: control systems technicians or reliability engineers.",
            "Alternative roles join with OR.",
            "The MUC3 site restriction applies to both alternatives, so it joins with AND.",
        ],
        '("control systems technicians" OR "reliability engineers") AND "MUC3"',
    ),
    (
        "Alert maintenance technicians working with robotic arms from Atlas Dynamics",
        "Alert <term>maintenance technicians</term> working with "
        "<term>robotic arms</term> from <term>Atlas Dynamics</term>",
        [
            "The audience role is maintenance technicians.",
            "They must work with robotic arms made by Atlas Dynamics.",
            "Role, equipment, and manufacturer all join with AND.",
        ],
        '"maintenance technicians" AND "robotic arms" AND "Atlas Dynamics"',
    ),
    (
        "Notify technicians who maintain conveyor belts but not at European sites",
        "Notify <term>technicians</term> who maintain <term>conveyor belts</term> "
        "but not at <term>European sites</term>",
        [
            "The audience role is technicians maintaining conveyor belts.",
            "The phrase 'but not at European sites' excludes that location with NOT.",
            "The role and equipment join with AND, then AND NOT the excluded location.",
        ],
        '"technicians" AND "conveyor belts" AND NOT "European sites"',
    ),
    (
        "Reach out to anyone working with pallet wrappers in LATAM",
        "Reach out to anyone working with <term>pallet wrappers</term> in <term>LATAM</term>",
        [
            "No role is stated, so the audience is anyone working with pallet wrappers.",
            "Recipients are limited to the LATAM region.",
            "Both conditions join with AND.",
        ],
        '"pallet wrappers" AND "LATAM"',
    ),
    (
        "Contact senior managers at SEA7",
        "Contact <term>senior managers</term> at <term>SEA7</term>",
        [
            "The audience role is senior managers.",
            "Recipients are limited to the SEA7 site.",
            "Both conditions join with AND.",
        ],
        '"senior managers" AND "SEA7"',
    ),
    (
        "Notify maintenance technicians and managers at GRU2",
        "Notify <term>maintenance technicians</term> and <term>managers</term> "
        "at <term>GRU2</term>",
        [
            "Two audience groups are enumerated: maintenance technicians and managers.",
            "A person holds one title, so enumerated groups join with OR.",
            "The GRU2 site restriction applies to both groups, joining with AND.",
        ],
        '("maintenance technicians" OR "managers") AND "GRU2"',
    ),
    (
        "Reach everyone who maintains equipment model CB500 in North America",
        "Reach everyone who maintains equipment model <term>CB500</term> in "
        "<term>North America</term>",
        [
            "The audience maintains equipment of model CB500.",
            "Recipients are limited to North America.",
            "Both conditions join with AND.",
        ],
        '"CB500" AND "North America"',
    ),
    (
        "Alert staff working with HelioTech equipment at MAD1 or GRU2",
        "Alert staff working with <term>HelioTech</term> equipment at "
        "<term>MAD1</term> or <term>GRU2</term>",
        [
            "The audience works with HelioTech equipment.",
            "Two alternative sites are given: MAD1 or GRU2, joining with OR.",
            "The manufacturer condition applies to both sites, joining with AND.",
        ],
        '"HelioTech" AND ("MAD1" OR "GRU2")',
    ),
    (
        "Send the bulletin to reliability engineers outside North America",
        "Send the bulletin to <term>reliability engineers</term> outside "
        "<term>North America</term>",
        [
            "The audience role is reliability engineers.",
            "The word 'outside' excludes North America with NOT.",
            "The role joins AND NOT the excluded region.",
        ],
        '"reliability engineers" AND NOT "North America"',
    ),
    (
        "Contact maintenance technicians at NRT5 working with sortation systems",
        "Contact <term>maintenance technicians</term> at <term>NRT5</term> "
        "working with <term>sortation systems</term>",
        [
            "The audience role is maintenance technicians.",
            "Recipients are limited to the NRT5 site.",
            "They must work with sortation systems; all three join with AND.",
        ],
        '"maintenance technicians" AND "NRT5" AND "sortation systems"',
    ),
    (
        "Notify anyone maintaining fire alarms of model FA123",
        "Notify anyone maintaining <term>fire alarms</term> of model <term>FA123</term>",
        [
            "The audience maintains fire alarms.",
            "The equipment is narrowed to model FA123.",
            "Both conditions join with AND.",
        ],
        '"fire alarms" AND "FA123"',
    ),
    (
        "Reach managers or senior managers in Europe",
        "Reach <term>managers</term> or <term>senior managers</term> in <term>Europe</term>",
        [
            "Two alternative roles are named: managers or senior managers.",
            "Alternative roles join with OR.",
            "The Europe restriction applies to both, joining with AND.",
        ],
        '("managers" OR "senior managers") AND "Europe"',
    ),
    (
        "Alert control systems technicians working with robotic arms or sortation systems",
        "Alert <term>control systems technicians</term> working with "
        "<term>robotic arms</term> or <term>sortation systems</term>",
        [
            "The audience role is control systems technicians.",
            "The equipment scope is an alternative: robotic arms or sortation systems, joining with OR.",
            "The role applies to both alternatives, joining with AND.",
        ],
        '"control systems technicians" AND ("robotic arms" OR "sortation systems")',
    ),
    (
        "Contact everyone at DUB4 except maintenance technicians",
        "Contact everyone at <term>DUB4</term> except <term>maintenance technicians</term>",
        [
            "The audience is everyone at the DUB4 site.",
            "The word 'except' excludes maintenance technicians with NOT.",
            "The site condition joins AND NOT the excluded role.",
        ],
        '"DUB4" AND NOT "maintenance technicians"',
    ),
    (
        "Notify people working with Vendor X conveyor belts at MUC3",
        "Notify people working with <term>Vendor X</term> "
        "<term>conveyor belts</term> at <term>MUC3</term>",
        [
            "The audience works with conveyor belts made by Vendor X.",
            "Recipients are limited to the MUC3 site.",
            "Manufacturer, equipment, and site all join with AND.",
        ],
        '"Vendor X" AND "conveyor belts" AND "MUC3"',
    ),
    (
        "Reach maintenance technicians in Latin America or Asia Pacific",
        "Reach <term>maintenance technicians</term> in <term>Latin America</term> "
        "or <term>Asia Pacific</term>",
        [
            "The audience role is maintenance technicians.",
            "Two alternative regions are given: Latin America or Asia Pacific, joining with OR.",
            "The role applies to both regions, joining with AND.",
        ],
        '"maintenance technicians" AND ("Latin America" OR "Asia Pacific")',
    ),
    (
        "Send reminders to reliability engineers and control systems technicians at SEA7",
        "Send reminders to <term>reliability engineers</term> and "
        "<term>control systems technicians</term> at <term>SEA7</term>",
        [
            "Two audience groups are enumerated: reliability engineers and control systems technicians.",
            "Enumerated groups join with OR.",
            "The SEA7 site restriction applies to both groups, joining with AND.",
        ],
        '("reliability engineers" OR "control systems technicians") AND "SEA7"',
    ),
]

# Statements whose terms cannot be linked (pipeline must fail at LINK).
LINK_FAIL_FLOWS: list[tuple[str, str]] = [
    (
        "Notify specialists working with hydraulic presses",
        "Notify specialists working with <term>hydraulic presses</term>",
    ),
    (
        "Alert the crew responsible for ancient fire suppression valves",
        "Alert the crew responsible for <term>ancient fire suppression valves</term>",
    ),
]

# NER completion corrupted twice: a word outside the markers is altered.
NER_CORRUPT_STATEMENT = "Ping the maintenance crew at DUB4 tomorrow"
NER_CORRUPT_COMPLETION = "Ping the maintenance team at <term>DUB4</term> tomorrow"

# NER first completion corrupted, retry completion correct.
NER_RETRY_OK_STATEMENT = "Remind technicians at GRU2 about safety drills"
NER_RETRY_OK_BAD = "Remind staff at <term>GRU2</term> about safety drills"
NER_RETRY_OK_GOOD = (
    "Remind <term>technicians</term> at <term>GRU2</term> about safety drills"
)

# Statement with no entities: completion repeats it untouched, no tags.
NER_ZERO_TERMS_STATEMENT = (
    "Please circulate the updated cafeteria menu to whoever wants it"
)

# FQF completion violating the leaf constraint twice.
FQF_LEAF_STATEMENT = "Escalate to managers at MAD1 urgently"
FQF_LEAF_TAGGED = "Escalate to <term>managers</term> at <term>MAD1</term> urgently"
FQF_LEAF_TERMS = ["managers", "MAD1"]
FQF_LEAF_BAD = '```fqf\nreasoning:\n- Managers and directors should see this.\nexpression: "directors" AND "MAD1"\n```'

# FQF completion with no parseable block twice.
FQF_FORMAT_STATEMENT = "Broadcast to reliability engineers at NRT5"
FQF_FORMAT_TAGGED = (
    "Broadcast to <term>reliability engineers</term> at <term>NRT5</term>"
)
FQF_FORMAT_TERMS = ["reliability engineers", "NRT5"]
FQF_FORMAT_BAD = "Sure! The audience is reliability engineers located at NRT5."

# FQF first completion malformed, retry completion correct.
FQF_RETRY_OK_STATEMENT = "Update managers working with pallet wrappers"
FQF_RETRY_OK_TAGGED = (
    "Update <term>managers</term> working with <term>pallet wrappers</term>"
)
FQF_RETRY_OK_TERMS = ["managers", "pallet wrappers"]
FQF_RETRY_OK_BAD = "```fqf\nreasoning:\n- Managers working with pallet wrappers.\n```"
FQF_RETRY_OK_GOOD = (
    "```fqf\nreasoning:\n- The audience role is managers.\n"
    "- They must work with pallet wrappers; both join with AND.\n"
    'expression: "managers" AND "pallet wrappers"\n```'
)


def fqf_completion(reasoning: list[str], expression: str) -> str:
    lines = ["```fqf", "reasoning:"]
    lines.extend(f"- {step}" for step in reasoning)
    lines.append(f"expression: {expression}")
    lines.append("```")
    return "\n".join(lines)


def extract_terms(tagged: str) -> list[str]:
    import re

    return list(dict.fromkeys(re.findall(r"<term>(.+?)</term>", tagged)))


def main() -> None:
    records: dict[str, str] = {}

    def add(prompt: str, completion: str) -> None:
        records[prompt_digest(prompt)] = json.dumps(
            {
                "digest": prompt_digest(prompt),
                "prompt": prompt,
                "completion": completion,
            },
            indent=2,
        )

    for statement, tagged, reasoning, expression in GOOD_FLOWS:
        add(build_ner_prompt(statement), tagged)
        add(
            build_fqf_prompt(statement, extract_terms(tagged)),
            fqf_completion(reasoning, expression),
        )

    for statement, tagged in LINK_FAIL_FLOWS:
        add(build_ner_prompt(statement), tagged)

    ner_prompt = build_ner_prompt(NER_CORRUPT_STATEMENT)
    add(ner_prompt, NER_CORRUPT_COMPLETION)
    add(ner_prompt + NER_RETRY_SUFFIX, NER_CORRUPT_COMPLETION)

    ner_prompt = build_ner_prompt(NER_RETRY_OK_STATEMENT)
    add(ner_prompt, NER_RETRY_OK_BAD)
    add(ner_prompt + NER_RETRY_SUFFIX, NER_RETRY_OK_GOOD)

    add(build_ner_prompt(NER_ZERO_TERMS_STATEMENT), NER_ZERO_TERMS_STATEMENT)

    add(build_ner_prompt(FQF_LEAF_STATEMENT), FQF_LEAF_TAGGED)
    fqf_prompt = build_fqf_prompt(FQF_LEAF_STATEMENT, FQF_LEAF_TERMS)
    add(fqf_prompt, FQF_LEAF_BAD)
    add(fqf_prompt + FQF_RETRY_SUFFIX, FQF_LEAF_BAD)

    add(build_ner_prompt(FQF_FORMAT_STATEMENT), FQF_FORMAT_TAGGED)
    fqf_prompt = build_fqf_prompt(FQF_FORMAT_STATEMENT, FQF_FORMAT_TERMS)
    add(fqf_prompt, FQF_FORMAT_BAD)
    add(fqf_prompt + FQF_RETRY_SUFFIX, FQF_FORMAT_BAD)

    add(build_ner_prompt(FQF_RETRY_OK_STATEMENT), FQF_RETRY_OK_TAGGED)
    fqf_prompt = build_fqf_prompt(FQF_RETRY_OK_STATEMENT, FQF_RETRY_OK_TERMS)
    add(fqf_prompt, FQF_RETRY_OK_BAD)
    add(fqf_prompt + FQF_RETRY_SUFFIX, FQF_RETRY_OK_GOOD)

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for stale in OUT_DIR.glob("*.json"):
        stale.unlink()
    for digest, payload in sorted(records.items()):
        (OUT_DIR / f"{digest}.json").write_text(payload + "\n")
    print(f"wrote {len(records)} fixtures to {OUT_DIR}")


if __name__ == "__main__":
    main()
