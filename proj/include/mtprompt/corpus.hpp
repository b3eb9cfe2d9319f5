#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mtprompt {

/// Language identifier such as "en", "de", "zh". Display names live in the
/// language-name table, so new codes need no code change here.
class LangCode {
 public:
  LangCode() = default;
  explicit LangCode(std::string code);

  const std::string& str() const noexcept { return code_; }
  bool empty() const noexcept { return code_.empty(); }

  friend bool operator==(const LangCode&, const LangCode&) = default;
  friend auto operator<=>(const LangCode&, const LangCode&) = default;

 private:
  std::string code_;
};

/// Ordered (source, target) language pair; source and target always differ.
class LanguagePair {
 public:
  LanguagePair(LangCode src, LangCode tgt);

  /// Parses "de-en".
  static LanguagePair parse(std::string_view text);

  const LangCode& src() const noexcept { return src_; }
  const LangCode& tgt() const noexcept { return tgt_; }
  LanguagePair reversed() const { return {tgt_, src_}; }
  /// "de-en"
  std::string str() const { return src_.str() + "-" + tgt_.str(); }

  friend bool operator==(const LanguagePair&, const LanguagePair&) = default;

 private:
  LangCode src_;
  LangCode tgt_;
};

struct ParallelExample {
  std::string id;
  std::string source_text;
  std::string target_text;
  LanguagePair pair;
};

struct MonolingualExample {
  std::string id;
  std::string text;
  LangCode lang;
};

enum class PoolTier { high_quality, low_quality };

std::string_view to_string(PoolTier tier);
PoolTier parse_tier(std::string_view text);

/// Selection source. All examples share `pair`; ids are unique.
class ExamplePool {
 public:
  ExamplePool(LanguagePair pair, PoolTier tier, std::vector<ParallelExample> examples);

  const LanguagePair& pair() const noexcept { return pair_; }
  PoolTier tier() const noexcept { return tier_; }
  const std::vector<ParallelExample>& examples() const noexcept { return examples_; }
  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }

  /// nullptr when absent.
  const ParallelExample* find(std::string_view id) const;

 private:
  LanguagePair pair_;
  PoolTier tier_;
  std::vector<ParallelExample> examples_;
};

struct Document {
  std::string doc_id;
  std::vector<ParallelExample> sentences;
};

struct DocumentCorpus {
  std::vector<Document> documents;
};

enum class PoolFormat { jsonl, tsv };

PoolFormat parse_pool_format(std::string_view text);

/// Loads a parallel pool. Missing ids become "<filename>:<line>".
/// Throws ParseError (with line number) or EmptyPoolError.
ExamplePool load_pool(const std::filesystem::path& path, PoolFormat format, const LanguagePair& pair,
                      PoolTier tier);
ExamplePool parse_pool(std::istream& in, std::string_view source_name, PoolFormat format,
                       const LanguagePair& pair, PoolTier tier);

/// Writes the pool back out. JSONL keeps ids; TSV is "src\ttgt".
void write_pool(std::ostream& out, const ExamplePool& pool, PoolFormat format);

/// One sentence per line; ids are "<filename>:<line>". Blank lines are a parse error.
std::vector<MonolingualExample> load_monolingual(const std::filesystem::path& path, const LangCode& lang);
std::vector<MonolingualExample> parse_monolingual(std::istream& in, std::string_view source_name,
                                                  const LangCode& lang);

/// {"doc_id": ..., "sentences": [{"src": ..., "tgt": ...}, ...]} per line.
DocumentCorpus load_documents(const std::filesystem::path& path, const LanguagePair& pair);
DocumentCorpus parse_documents(std::istream& in, std::string_view source_name, const LanguagePair& pair);

struct AblationSplit {
  std::vector<ParallelExample> test_set;
  ExamplePool selection_pool;
};

/// Holds out `n_test` examples as a test set. Sampling is keyed on sorted ids,
/// so permuting the pool does not change which ids are held out. Both halves
/// keep the pool's original order.
AblationSplit split_ablation(const ExamplePool& pool, std::size_t n_test, std::uint64_t seed);

/// Non-overlapping chunks of `chunk_size` in order; the last one may be shorter.
template <typename T>
std::vector<std::vector<T>> chunk_document(const std::vector<T>& doc, std::size_t chunk_size) {
  if (chunk_size == 0) throw std::invalid_argument("chunk_document: chunk_size must be >= 1");
  std::vector<std::vector<T>> chunks;
  for (std::size_t i = 0; i < doc.size(); i += chunk_size) {
    const auto end = std::min(doc.size(), i + chunk_size);
    chunks.emplace_back(doc.begin() + static_cast<std::ptrdiff_t>(i),
                        doc.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return chunks;
}

/// Splits every document into chunks, each chunk becoming one document "<doc_id>#<n>".
DocumentCorpus chunk_documents(const DocumentCorpus& corpus, std::size_t chunk_size);

}  // namespace mtprompt
