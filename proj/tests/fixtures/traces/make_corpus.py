#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
#
# Regenerates corpus.jsonl from the three reference outputs. Each variant is a
# single known mutation, and its expected strict/soft verdict follows from
# the mutation alone.

import json
import pathlib

HERE = pathlib.Path(__file__).parent

BASES = [
    ("llama3_grpo", HERE / "llama3_grpo_output.txt", 6, "1:DECEASED", "27.9"),
    ("med42_grpo", HERE / "med42_grpo_output.txt", 7, "1:DECEASED", "33.0"),
    ("med42_baseline", HERE / "med42_baseline_output.txt", 5, "1:DECEASED", "12.4"),
]


def prediction_sub(text, old, new):
    head, tail = text.split("<prediction>")
    return head + "<prediction>" + tail.replace(old, new, 1)


def mutations(text, status, months):
    reasoning = text[text.index("<reasoning>"):text.index("</reasoning>") + len("</reasoning>")]
    comment = text[text.index("<comment>"):text.index("</comment>") + len("</comment>")]
    yield "trailing_text", text.rstrip() + "\nThank you for the case.\n", False, True, True
    yield "preamble", "Here is my analysis.\n" + text, False, True, True
    yield "missing_comment_close", text.replace("</comment>", ""), False, False, False
    yield "duplicate_reasoning", text.rstrip() + "\n" + reasoning + "\n", False, True, True
    swapped = text.replace(reasoning, "@@R@@").replace(comment, reasoning).replace("@@R@@", comment)
    yield "comment_first", swapped, False, False, False
    yield "no_status", prediction_sub(text, status, "unknown"), False, False, False
    yield "no_months", prediction_sub(text, months, "unknown"), False, False, False
    body_start = text.index("<reasoning>") + len("<reasoning>")
    body_end = text.index("</reasoning>")
    yield "empty_reasoning", text[:body_start] + "\n\n" + text[body_end:], False, False, False
    yield "crlf_and_blank_lines", "\n\n" + text.replace("\n", "\r\n") + "\r\n\r\n", True, True, True
    yield "uppercase_tags", text.replace("<reasoning>", "<REASONING>").replace("</reasoning>", "</REASONING>"), False, False, False
    yield "lowercase_status", prediction_sub(text, status, status.lower()), True, True, True
    yield "negative_months", prediction_sub(text, months, "-3"), False, False, False
    yield "text_between_blocks", text.replace("</reasoning>", "</reasoning>\nSee notes above.", 1), False, True, True


def main():
    rows = []
    for name, path, steps, status, months in BASES:
        text = path.read_text()
        rows.append(dict(name=name, profile="clinical", text=text, strict=True, soft=True,
                         steps=steps, status=status, months=float(months)))
        for mut, mtext, strict, soft, keeps in mutations(text, status, months):
            row = dict(name=f"{name}/{mut}", profile="clinical", text=mtext, strict=strict, soft=soft)
            if soft and keeps:
                row.update(steps=steps, status=status,
                           months=float(months))
            rows.append(row)

    r = "<reasoning>\nStep 1: Stage IV with liver involvement.\nStep 2: Markers rising.\n</reasoning>\n"
    reward_cases = [
        ("answer_ok", r + "<answer>\n1:DECEASED 30\n</answer>", True, True),
        ("answer_trailing", r + "<answer>\n1:DECEASED 30\n</answer>\nDone.", False, True),
        ("answer_unclosed", r + "<answer>\n1:DECEASED 30\n", False, False),
        ("answer_first", "<answer>\n1:DECEASED 30\n</answer>\n" + r, False, False),
        ("untagged", "1:DECEASED 30", False, False),
        ("empty", "", False, False),
        ("answer_nested", r + "<answer>\n<answer>0:LIVING 12</answer>\n</answer>", False, True),
        ("answer_labelled", r + "<answer>\n(survival status) 0:LIVING\n(survival months) 12\n</answer>", True, True),
    ]
    for name, text, strict, soft in reward_cases:
        rows.append(dict(name=f"reward/{name}", profile="reward", text=text, strict=strict, soft=soft))

    with open(HERE / "corpus.jsonl", "w") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
    print(len(rows), "rows")


if __name__ == "__main__":
    main()
