#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mtprompt/corpus.hpp"
#include "mtprompt/prompt_template.hpp"

namespace mtprompt {

enum class Ordering {
  ascending_score,  ///< lowest score first, so the best example sits next to the test input
  pool_order,       ///< the order the examples have in the pool
};

Ordering parse_ordering(std::string_view text);

struct SelectionParams {
  std::size_t k = 1;
  /// Examples with fewer than min_tokens or more than max_tokens on either side are skipped.
  std::size_t min_tokens = 10;
  std::size_t max_tokens = 100;
  std::uint64_t seed = 0;
  Ordering ordering = Ordering::ascending_score;
};

/// Pool examples whose source and target token counts both lie in [min_tokens, max_tokens].
std::vector<ParallelExample> length_filter(const ExamplePool& pool, const SelectionParams& params);

/// k distinct examples drawn after length filtering, in draw order.
Demonstration select_random(const ExamplePool& pool, const SelectionParams& params);

/// The k highest-valued surviving examples (ties by ascending id), arranged by `params.ordering`.
Demonstration select_topk_by_feature(const ExamplePool& pool, const std::map<std::string, double>& feature_values,
                                     const SelectionParams& params);

/// Sorts by score ascending (ties by id) or keeps the input order.
Demonstration order_demonstration(const std::vector<ParallelExample>& examples, const std::vector<double>& scores,
                                  Ordering ordering);

enum class StageScaling {
  /// Stage counts shrink with the pool: min(c, max(1, ceil(c * |pool| / reference_pool_size))).
  proportional,
  /// Stage counts are only capped by what is left.
  clamp_only,
};

struct CombinedParams {
  std::size_t sem_keep = 11000;
  std::size_t sem_drop = 1000;
  std::size_t lm_keep = 1000;
  StageScaling scaling = StageScaling::proportional;
  std::size_t reference_pool_size = 110000;

  void validate() const;
};

/// Stage sizes actually used for a pool of `pool_size` examples.
struct CombinedStages {
  std::size_t sem_keep = 0;
  std::size_t sem_drop = 0;
  std::size_t lm_keep = 0;
};

CombinedStages combined_stages(std::size_t pool_size, const CombinedParams& params);

/// Low-quality-pool strategy: keep the top sem_keep by SemScore, drop the top
/// sem_drop of those, keep the top lm_keep of the rest by LMScore, then take
/// the k longest targets. Every ranking is descending with ties by ascending
/// id. The result is in TLength order, longest first.
Demonstration select_combined(const ExamplePool& pool, const std::map<std::string, double>& sem_values,
                              const std::map<std::string, double>& lm_values,
                              const std::map<std::string, double>& tlen_values, std::size_t k,
                              const CombinedParams& params);

/// One JSON object per example: {"id", "src", "tgt", "pair"}.
void write_demonstration_jsonl(std::ostream& out, const Demonstration& demo);
Demonstration read_demonstration_jsonl(std::istream& in);

/// SHA-256 over the JSONL serialization.
std::string demonstration_hash(const Demonstration& demo);

}  // namespace mtprompt
