"""Records SacreBLEU reference values for the BLEU fixtures.

Run once; the output is checked in as tests/data/bleu_oracle.json.
    python3 tests/oracles/bleu_oracle.py > tests/data/bleu_oracle.json
"""
import json
import pathlib

import sacrebleu
from sacrebleu.tokenizers.tokenizer_13a import Tokenizer13a
from sacrebleu.tokenizers.tokenizer_zh import TokenizerZh

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def load(name):
    hyps, refs = [], []
    for line in (DATA / name).read_text(encoding="utf-8").splitlines():
        h, r = line.split("\t")
        hyps.append(h)
        refs.append(r)
    return hyps, refs


def scores(hyps, refs, tok):
    out = {}
    for smooth in ("none", "exp"):
        b = sacrebleu.corpus_bleu(hyps, [refs], tokenize=tok, smooth_method=smooth)
        out[smooth] = {"score": b.score, "counts": b.counts, "totals": b.totals,
                       "sys_len": b.sys_len, "ref_len": b.ref_len, "bp": b.bp}
    return out


def main():
    result = {"sacrebleu_version": sacrebleu.__version__, "fixtures": {}}
    for name, tok, tokenizer in (("bleu_latin.tsv", "13a", Tokenizer13a()), ("bleu_zh.tsv", "zh", TokenizerZh())):
        hyps, refs = load(name)
        entry = scores(hyps, refs, tok)
        entry["tokenizer"] = tok
        entry["tokenized_hyps"] = [tokenizer(h.rstrip()) for h in hyps]
        entry["tokenized_refs"] = [tokenizer(r.rstrip()) for r in refs]
        entry["segments"] = [sacrebleu.sentence_bleu(h, [r], tokenize=tok, smooth_method="none").score
                             for h, r in zip(hyps, refs)]
        result["fixtures"][name] = entry
    # Two documents scored over their concatenations.
    hyps, refs = load("bleu_latin.tsv")
    docs_h = [" ".join(hyps[:4]), " ".join(hyps[4:])]
    docs_r = [" ".join(refs[:4]), " ".join(refs[4:])]
    result["doc_bleu_latin_4_6"] = sacrebleu.corpus_bleu(docs_h, [docs_r], tokenize="13a", smooth_method="none").score
    hyps, refs = load("bleu_zh.tsv")
    result["doc_bleu_zh_4_6"] = sacrebleu.corpus_bleu(["".join(hyps[:4]), "".join(hyps[4:])],
                                                      [["".join(refs[:4]), "".join(refs[4:])]],
                                                      tokenize="zh", smooth_method="none").score
    print(json.dumps(result, ensure_ascii=False, indent=1))


if __name__ == "__main__":
    main()
