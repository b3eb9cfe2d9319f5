"""Writes tests/data/golden_prompts.jsonl.

The template table below is typed in directly from the template definitions
(rows A-F, three template languages, optional line break) and shares no code
with the C++ renderer.
    python3 tests/oracles/golden_prompts.py > tests/data/golden_prompts.jsonl
"""
import json

NAMES = {
    "English": {"en": "English", "de": "German", "zh": "Chinese"},
    "German": {"en": "Englisch", "de": "Deutsch", "zh": "Chinesisch"},
    "Chinese": {"en": "英文", "de": "德文", "zh": "中文"},
}
COLON = {"English": ": ", "German": ": ", "Chinese": "："}
TO = {"English": "Translate to {t}", "German": "Übersetze nach {t}", "Chinese": "翻译成{t}"}
FROM = {"English": "Translate from {s} to {t}", "German": "Übersetze von {s} nach {t}", "Chinese": "从{s}翻译成{t}"}

INPUTS = {("de", "en"): "Das Wetter ist heute schön.", ("en", "zh"): "The weather is nice today."}
EXAMPLES = {
    ("de", "en"): [
        ("Guten Morgen.", "Good morning."),
        ("Wie spät ist es?", "What time is it?"),
        ("Ich lese ein Buch.", "I am reading a book."),
        ("Der Zug hat Verspätung.", "The train is delayed."),
        ("Wir sehen uns morgen.", "See you tomorrow."),
    ],
    ("en", "zh"): [
        ("Good morning.", "早上好。"),
        ("What time is it?", "现在几点了？"),
        ("I am reading a book.", "我在看书。"),
        ("The train is delayed.", "火车晚点了。"),
        ("See you tomorrow.", "明天见。"),
    ],
}


def zero_shot(tid, lang, brk, src, tgt, x):
    n = NAMES[lang]
    c = COLON[lang]
    gap = "\n" if brk else " "
    head = {"A": n[src] + c, "B": "", "C": "", "D": "", "E": n[src] + c, "F": n[src] + c}[tid]
    tail = {
        "A": n[tgt] + c,
        "B": n[tgt] + c,
        "C": TO[lang].format(t=n[tgt]) + c,
        "D": FROM[lang].format(s=n[src], t=n[tgt]) + c,
        "E": TO[lang].format(t=n[tgt]) + c,
        "F": FROM[lang].format(s=n[src], t=n[tgt]) + c,
    }[tid]
    return head + x + gap + tail


def few_shot(tid, lang, brk, test_pair, prompt_pair, examples, x):
    gap = "\n" if brk else " "
    out = ""
    for xs, ys in examples:
        out += zero_shot(tid, lang, brk, *prompt_pair, xs) + ys + gap
    return out + zero_shot(tid, lang, brk, *test_pair, x)


def main():
    cases = []
    for pair in (("de", "en"), ("en", "zh")):
        for lang in ("English", "German", "Chinese"):
            for tid in "ABCDEF":
                for brk in (False, True):
                    cases.append({"template": tid, "language": lang, "line_break": brk, "pair": "-".join(pair),
                                  "prompt_pair": "-".join(pair), "k": 0,
                                  "prompt": zero_shot(tid, lang, brk, *pair, INPUTS[pair])})
    for pair in (("de", "en"), ("en", "zh")):
        for brk in (False, True):
            for k in (0, 1, 2, 5):
                cases.append({"template": "A", "language": "English", "line_break": brk, "pair": "-".join(pair),
                              "prompt_pair": "-".join(pair), "k": k,
                              "prompt": few_shot("A", "English", brk, pair, pair, EXAMPLES[pair][:k], INPUTS[pair])})
    # Cross-lingual demonstration: de-en examples in front of an en-zh test input.
    for lang in ("English", "Chinese"):
        cases.append({"template": "A", "language": lang, "line_break": False, "pair": "en-zh", "prompt_pair": "de-en",
                      "k": 2, "prompt": few_shot("A", lang, False, ("en", "zh"), ("de", "en"),
                                                 EXAMPLES[("de", "en")][:2], INPUTS[("en", "zh")])})
    for i, c in enumerate(cases):
        c["case"] = i
        print(json.dumps(c, ensure_ascii=False))


if __name__ == "__main__":
    main()
