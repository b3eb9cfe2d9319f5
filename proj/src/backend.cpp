#include "mtprompt/backend.hpp"

#include <stdexcept>

#include "mtprompt/errors.hpp"

namespace mtprompt {

std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops) {
  std::size_t cut = text.size();
  for (const auto& stop : stops) {
    if (stop.empty()) continue;
    const auto pos = text.find(stop);
    if (pos != std::string_view::npos && pos < cut) cut = pos;
  }
  return std::string(text.substr(0, cut));
}

void validate(const GenerationRequest& req) {
  if (req.prompt.empty()) throw std::invalid_argument("generate: empty prompt");
  if (req.beam_size < 1) throw std::invalid_argument("generate: beam_size must be >= 1");
  if (req.max_new_tokens < 1) throw std::invalid_argument("generate: max_new_tokens must be >= 1");
}

void DimensionGuard::check(std::size_t dim, std::string_view source) {
  std::lock_guard lock(mu_);
  if (dim == 0) throw ProtocolError(std::string(source) + ": empty embedding vector");
  if (!dim_) {
    dim_ = dim;
  } else if (*dim_ != dim) {
    throw ProtocolError(std::string(source) + ": embedding dimension changed from " + std::to_string(*dim_) +
                        " to " + std::to_string(dim));
  }
}

std::optional<std::size_t> DimensionGuard::dim() const {
  std::lock_guard lock(mu_);
  return dim_;
}

}  // namespace mtprompt
