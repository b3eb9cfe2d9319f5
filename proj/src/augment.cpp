#include "mtprompt/augment.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>
#include <stdexcept>

#include "mtprompt/errors.hpp"
#include "mtprompt/parallel.hpp"
#include "mtprompt/rng.hpp"
#include "mtprompt/text.hpp"

namespace mtprompt {

using json = nlohmann::json;

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::random_pair: return "random_pair";
    case Provenance::forward_translated: return "forward_translated";
    case Provenance::back_translated: return "back_translated";
  }
  return "?";
}

Provenance parse_provenance(std::string_view text) {
  for (auto p : {Provenance::random_pair, Provenance::forward_translated, Provenance::back_translated}) {
    if (to_string(p) == text) return p;
  }
  throw std::invalid_argument("unknown provenance '" + std::string(text) + "'");
}

Demonstration AugmentedDemonstration::as_demonstration() const {
  Demonstration demo{{}, pair};
  demo.examples.reserve(examples.size());
  for (const auto& a : examples) demo.examples.push_back(a.example);
  return demo;
}

GenerationRequest translation_request(const PromptRenderer& renderer, const PromptTemplate& t,
                                      const LanguagePair& pair, std::string_view input) {
  GenerationRequest req;
  req.prompt = renderer.render_zero_shot(t, pair, input);
  req.stop_sequences = renderer.stop_sequences(t, pair);
  return req;
}

AugmentedDemonstration build_random_pairs(const std::vector<MonolingualExample>& src_mono,
                                          const std::vector<MonolingualExample>& tgt_mono,
                                          const LanguagePair& pair, std::size_t k, std::uint64_t seed) {
  if (src_mono.size() < k || tgt_mono.size() < k) {
    throw std::invalid_argument("build_random_pairs: need " + std::to_string(k) + " sentences per side, have " +
                                std::to_string(src_mono.size()) + " and " + std::to_string(tgt_mono.size()));
  }
  Rng rng(seed);
  const auto si = rng.sample_indices(src_mono.size(), k);
  const auto ti = rng.sample_indices(tgt_mono.size(), k);
  AugmentedDemonstration out{{}, pair};
  for (std::size_t i = 0; i < k; ++i) {
    const auto& s = src_mono[si[i]];
    const auto& t = tgt_mono[ti[i]];
    out.examples.push_back({ParallelExample{"rp:" + s.id + "|" + t.id, s.text, t.text, pair},
                            Provenance::random_pair, PromptTemplate{}});
  }
  return out;
}

namespace {

AugmentedDemonstration build_translated(const std::vector<MonolingualExample>& mono, const LanguagePair& pair,
                                        const PromptRenderer& renderer, Backend& backend, std::size_t k,
                                        std::uint64_t seed, const AugmentOptions& opts, Provenance provenance) {
  const bool back = provenance == Provenance::back_translated;
  const char* what = back ? "build_back_translated" : "build_forward_translated";
  const LangCode& real_lang = back ? pair.tgt() : pair.src();
  // Back-translation generates the source from the target, hence the reversed direction.
  const LanguagePair gen_pair = back ? pair.reversed() : pair;
  for (const auto& m : mono) {
    if (!(m.lang == real_lang)) {
      throw std::invalid_argument(std::string(what) + ": sentence '" + m.id + "' is '" + m.lang.str() +
                                  "', expected '" + real_lang.str() + "'");
    }
  }
  if (k == 0) throw std::invalid_argument(std::string(what) + ": k must be >= 1");
  if (mono.size() < k) {
    throw std::invalid_argument(std::string(what) + ": need " + std::to_string(k) + " sentences, have " +
                                std::to_string(mono.size()));
  }

  Rng rng(seed);
  const auto order = rng.sample_indices(mono.size(), mono.size());
  AugmentedDemonstration out{{}, pair};
  std::size_t cursor = 0;
  std::size_t dropped = 0;
  while (out.examples.size() < k && cursor < order.size()) {
    const std::size_t wave = std::min(k - out.examples.size(), order.size() - cursor);
    const auto generated = parallel_map(wave, opts.jobs, [&](std::size_t i) {
      const auto& m = mono[order[cursor + i]];
      return backend.generate(translation_request(renderer, opts.generator_template, gen_pair, m.text)).text;
    });
    for (std::size_t i = 0; i < wave; ++i) {
      const auto& m = mono[order[cursor + i]];
      if (text::is_blank(generated[i])) {
        ++dropped;
        continue;
      }
      ParallelExample ex{(back ? "bt:" : "ft:") + m.id, back ? generated[i] : m.text, back ? m.text : generated[i],
                         pair};
      out.examples.push_back({std::move(ex), provenance, opts.generator_template});
    }
    cursor += wave;
  }
  if (out.examples.size() < k) {
    throw Error(std::string(what) + ": only " + std::to_string(out.examples.size()) + " of " + std::to_string(k) +
                " pairs built; " + std::to_string(dropped) + " empty generations dropped");
  }
  return out;
}

}  // namespace

AugmentedDemonstration build_back_translated(const std::vector<MonolingualExample>& tgt_mono,
                                             const LanguagePair& pair, const PromptRenderer& renderer,
                                             Backend& backend, std::size_t k, std::uint64_t seed,
                                             const AugmentOptions& opts) {
  return build_translated(tgt_mono, pair, renderer, backend, k, seed, opts, Provenance::back_translated);
}

AugmentedDemonstration build_forward_translated(const std::vector<MonolingualExample>& src_mono,
                                                const LanguagePair& pair, const PromptRenderer& renderer,
                                                Backend& backend, std::size_t k, std::uint64_t seed,
                                                const AugmentOptions& opts) {
  return build_translated(src_mono, pair, renderer, backend, k, seed, opts, Provenance::forward_translated);
}

void write_augmented_jsonl(std::ostream& out, const AugmentedDemonstration& demo) {
  for (const auto& a : demo.examples) {
    const auto& t = a.generator_template;
    json j{{"id", a.example.id},
           {"src", a.example.source_text},
           {"tgt", a.example.target_text},
           {"pair", a.example.pair.str()},
           {"provenance", std::string(to_string(a.provenance))},
           {"generator_template",
            {{"id", std::string(to_string(t.id))},
             {"language", std::string(to_string(t.language))},
             {"line_break", t.line_break}}}};
    out << j.dump() << '\n';
  }
}

AugmentedDemonstration read_augmented_jsonl(std::istream& in) {
  std::vector<AugmentedExample> examples;
  std::string line;
  std::size_t line_no = 0;
  while (text::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto& g = j.at("generator_template");
      examples.push_back({ParallelExample{j.at("id").get<std::string>(), j.at("src").get<std::string>(),
                                          j.at("tgt").get<std::string>(),
                                          LanguagePair::parse(j.at("pair").get<std::string>())},
                          parse_provenance(j.at("provenance").get<std::string>()),
                          PromptTemplate{parse_template_id(g.at("id").get<std::string>()),
                                         parse_template_language(g.at("language").get<std::string>()),
                                         g.at("line_break").get<bool>()}});
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad augmented record: ") + e.what(), line_no);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("bad augmented record: ") + e.what(), line_no);
    }
  }
  if (examples.empty()) throw ParseError("empty augmented demonstration", 0);
  AugmentedDemonstration demo{{}, examples.front().example.pair};
  demo.examples = std::move(examples);
  return demo;
}

}  // namespace mtprompt
