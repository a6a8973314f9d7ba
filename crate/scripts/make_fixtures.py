#!/usr/bin/env python3
"""Writes the snapshot and problem fixtures under crates/core/fixtures."""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "fixtures"
HEADER = {"format": "relmap-snapshot", "version": 1, "created_at": "2024-01-01T00:00:00Z"}

SOLAR = {
    "kb": [
        ("earth", "sun", ["revolve around", "rotate around", "orbit", "far from", "be attracted to"]),
        ("sun", "earth", ["attract", "heat", "light up"]),
        ("earth", "gravity", ["held by", "be affected by"]),
        ("gravity", "earth", ["pull on", "act on"]),
        ("sun", "gravity", ["produce", "exert"]),
        ("gravity", "sun", ["produced by"]),
        ("earth", "solar system", ["be inside", "belong to"]),
        ("solar system", "earth", ["include"]),
        ("sun", "solar system", ["be the center of"]),
        ("solar system", "sun", ["is centered on"]),
        ("newton", "gravity", ["discover", "describe", "explain"]),
        ("gravity", "newton", ["discovered by", "described by"]),
        ("newton", "sun", ["study"]),
        ("newton", "solar system", ["model"]),
        ("electrons", "nucleus", ["revolve around", "rotate around", "orbit", "circle", "be attracted to"]),
        ("nucleus", "electrons", ["attract", "hold"]),
        ("electrons", "electric force", ["held by", "be affected by"]),
        ("electric force", "electrons", ["pull on", "act on"]),
        ("nucleus", "electric force", ["produce", "exert"]),
        ("electric force", "nucleus", ["produced by"]),
        ("electrons", "atom", ["be inside", "belong to"]),
        ("atom", "electrons", ["include"]),
        ("nucleus", "atom", ["be the center of"]),
        ("atom", "nucleus", ["is centered on"]),
        ("faraday", "electric force", ["discover", "describe", "explain"]),
        ("electric force", "faraday", ["discovered by", "described by"]),
        ("faraday", "nucleus", ["study"]),
        ("faraday", "atom", ["model"]),
    ],
}

EXTRA = {
    "kb": [
        ("water", "pipe", ["flow through", "move along"]),
        ("pipe", "water", ["carry", "transport"]),
        ("pump", "water", ["push", "drive"]),
        ("pressure", "water", ["push", "move"]),
        ("pump", "pressure", ["create", "build up"]),
        ("pressure", "pump", ["created by"]),
        ("current", "wire", ["flow through", "move along"]),
        ("wire", "current", ["carry", "transport"]),
        ("battery", "current", ["push", "drive"]),
        ("voltage", "current", ["push", "move"]),
        ("battery", "voltage", ["create", "build up"]),
        ("voltage", "battery", ["created by"]),
        ("answer", "riddle", ["solve", "unravel"]),
        ("riddle", "answer", ["solved by", "need"]),
        ("logic", "riddle", ["crack", "work through"]),
        ("answer", "logic", ["come from", "follow from"]),
        ("key", "lock", ["solve", "unravel", "open"]),
        ("lock", "key", ["solved by", "need"]),
        ("mechanism", "lock", ["crack", "work through"]),
        ("key", "mechanism", ["come from", "follow from"]),
        ("bee", "hive", ["live in", "work in"]),
        ("hive", "honey", ["store", "make"]),
        ("bee", "honey", ["produce", "collect"]),
        ("worker", "factory", ["live in", "work in"]),
        ("factory", "product", ["store", "make"]),
        ("worker", "product", ["produce", "collect"]),
        ("teacher", "student", ["teach", "help"]),
        ("student", "teacher", ["learn from", "visit"]),
        ("teacher", "school", ["work at"]),
        ("student", "school", ["attend", "go to"]),
        ("chalk", "teacher", ["used by"]),
        ("doctor", "patient", ["treat", "help"]),
        ("patient", "doctor", ["learn from", "visit"]),
        ("doctor", "hospital", ["work at"]),
        ("patient", "hospital", ["attend", "go to"]),
    ],
    "web": [
        ("water", "pipe", ["leak from"]),
        ("current", "wire", ["leak from"]),
        ("bee", "hive", ["return to"]),
        ("worker", "factory", ["return to"]),
    ],
    # Covers none of the problems; disabling it must change nothing.
    "news": [
        ("paris", "france", ["capital of"]),
        ("rome", "italy", ["capital of"]),
    ],
}

B1 = {
    "kb": [
        ("answer", "riddle", ["solve", "unravel"]),
        ("riddle", "answer", ["solved by"]),
        ("logic", "riddle", ["crack"]),
        ("answer", "logic", ["come from"]),
        ("key", "mechanism", ["come from"]),
        ("key", "lock", ["solve", "unravel", "open"]),
        ("lock", "key", ["solved by", "opened by"]),
        ("mechanism", "lock", ["crack"]),
        ("key", "problem", ["solve"]),
        ("problem", "key", ["solved by"]),
        ("key", "door", ["unravel"]),
        ("mechanism", "safe", ["crack"]),
    ],
}
B1_ENTITIES = {
    "kb": [
        ("key", "solve", "forward", ["lock", "problem", "lock", "mystery"]),
        ("key", "unravel", "forward", ["lock", "door", "problem"]),
        ("key", "solved by", "backward", ["lock", "problem", "puzzle"]),
        ("mechanism", "crack", "forward", ["lock", "safe", "code"]),
    ],
}

B2 = {
    "kb": [
        ("electrons", "nucleus", ["revolve around", "be attracted to"]),
        ("nucleus", "electrons", ["attract"]),
        ("nucleus", "electricity", ["produce"]),
        ("electricity", "nucleus", ["produced by"]),
        ("faraday", "nucleus", ["study"]),
        ("electrons", "electricity", ["carry"]),
        ("faraday", "electricity", ["discover"]),
        ("electricity", "faraday", ["discovered by"]),
        ("earth", "gravity", ["carry"]),
        ("newton", "gravity", ["discover"]),
        ("gravity", "newton", ["discovered by"]),
        ("earth", "sun", ["revolve around", "be attracted to"]),
        ("sun", "earth", ["attract"]),
        ("sun", "gravity", ["produce"]),
        ("gravity", "sun", ["produced by"]),
        ("newton", "sun", ["study"]),
        ("earth", "moon", ["attract"]),
        ("newton", "mars", ["study"]),
    ],
}
B2_ENTITIES = {
    "kb": [
        ("earth", "revolve around", "forward", ["sun", "sun", "star"]),
        ("earth", "be attracted to", "forward", ["sun", "moon"]),
        ("gravity", "produce", "backward", ["sun", "moon", "mass"]),
        ("gravity", "produced by", "forward", ["sun", "mass"]),
        ("newton", "study", "forward", ["sun", "mars", "moon"]),
    ],
}

PROBLEMS = [
    {
        "id": "solar-atom",
        "category": "near",
        "base": ["sun", "earth", "gravity", "solar system", "newton"],
        "target": ["nucleus", "electrons", "electric force", "atom", "faraday"],
        "gold": {
            "sun": "nucleus",
            "earth": "electrons",
            "gravity": "electric force",
            "solar system": "atom",
            "newton": "faraday",
        },
    },
    {
        "id": "water-circuit",
        "category": "far",
        "base": ["water", "pipe", "pump", "pressure"],
        "target": ["current", "wire", "battery", "voltage"],
        "gold": {"water": "current", "pipe": "wire", "pump": "battery", "pressure": "voltage"},
    },
    {
        "id": "riddle-lock",
        "category": "far",
        "base": ["answer", "logic", "riddle"],
        "target": ["key", "mechanism", "lock"],
        "gold": {"answer": "key", "logic": "mechanism", "riddle": "lock"},
    },
    {
        "id": "hive-factory",
        "category": "near",
        "base": ["bee", "hive", "honey"],
        "target": ["worker", "factory", "product"],
        "gold": {"bee": "worker", "hive": "factory", "honey": "product"},
    },
    {
        "id": "school-hospital",
        "category": "extended",
        "base": ["teacher", "student", "school", "chalk"],
        "target": ["doctor", "patient", "hospital"],
        "gold": {"teacher": "doctor", "student": "patient", "school": "hospital"},
    },
]


def write_snapshot(path, relations, entities=None):
    lines = [json.dumps(HEADER)]
    for source, rows in relations.items():
        for head, tail, rels in rows:
            lines.append(json.dumps({"source": source, "head": head, "tail": tail, "relations": rels}))
    for source, rows in (entities or {}).items():
        for anchor, rel, direction, names in rows:
            lines.append(
                json.dumps(
                    {
                        "source": source,
                        "anchor": anchor,
                        "relation": rel,
                        "direction": direction,
                        "entities": names,
                    }
                )
            )
    path.write_text("\n".join(lines) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_snapshot(OUT / "solar.jsonl", SOLAR)
    merged = {k: list(v) for k, v in SOLAR.items()}
    for source, rows in EXTRA.items():
        merged.setdefault(source, []).extend(rows)
    write_snapshot(OUT / "eval.jsonl", merged)
    write_snapshot(OUT / "suggest_b1.jsonl", B1, B1_ENTITIES)
    write_snapshot(OUT / "suggest_b2.jsonl", B2, B2_ENTITIES)
    (OUT / "problems.json").write_text(json.dumps(PROBLEMS, indent=2) + "\n")


if __name__ == "__main__":
    main()
