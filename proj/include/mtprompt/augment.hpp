#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "mtprompt/backend.hpp"
#include "mtprompt/corpus.hpp"
#include "mtprompt/prompt_template.hpp"

namespace mtprompt {

enum class Provenance { random_pair, forward_translated, back_translated };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

/// A prompt example built from monolingual text.
/// back_translated: target is real text, source generated.
/// forward_translated: source is real text, target generated.
struct AugmentedExample {
  ParallelExample example;
  Provenance provenance = Provenance::random_pair;
  PromptTemplate generator_template;
};

struct AugmentedDemonstration {
  std::vector<AugmentedExample> examples;
  LanguagePair pair;

  Demonstration as_demonstration() const;
};

/// Decoding used for every zero-shot translation: beam 2, 256 new tokens,
/// stop at "\n" or the source cue.
GenerationRequest translation_request(const PromptRenderer& renderer, const PromptTemplate& t,
                                      const LanguagePair& pair, std::string_view input);

/// k pairs whose two sides are drawn independently without replacement.
AugmentedDemonstration build_random_pairs(const std::vector<MonolingualExample>& src_mono,
                                          const std::vector<MonolingualExample>& tgt_mono,
                                          const LanguagePair& pair, std::size_t k, std::uint64_t seed);

struct AugmentOptions {
  PromptTemplate generator_template{};  // A, English, no line break
  std::size_t jobs = 1;
};

/// Pseudo-parallel pairs from target-side text: each sampled sentence Y is
/// translated tgt -> src zero-shot and paired as (generated, Y). Empty
/// generations are dropped and replaced by the next sample; running out of
/// samples throws with the dropped count.
AugmentedDemonstration build_back_translated(const std::vector<MonolingualExample>& tgt_mono,
                                             const LanguagePair& pair, const PromptRenderer& renderer,
                                             Backend& backend, std::size_t k, std::uint64_t seed,
                                             const AugmentOptions& opts = {});

/// Mirror of build_back_translated: source text is real, target generated.
AugmentedDemonstration build_forward_translated(const std::vector<MonolingualExample>& src_mono,
                                                const LanguagePair& pair, const PromptRenderer& renderer,
                                                Backend& backend, std::size_t k, std::uint64_t seed,
                                                const AugmentOptions& opts = {});

/// JSONL with "provenance" and "generator_template" fields.
void write_augmented_jsonl(std::ostream& out, const AugmentedDemonstration& demo);
AugmentedDemonstration read_augmented_jsonl(std::istream& in);

}  // namespace mtprompt
