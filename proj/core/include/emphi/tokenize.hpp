#pragma once

#include <string>
#include <vector>

namespace emphi {

/// Lowercasing word tokenizer with standalone punctuation and split
/// contractions ("that's" -> that 's, "don't" -> do n't). Deterministic and
/// idempotent on the space-joined output of a previous run. Empty input
/// yields an empty sequence.
std::vector<std::string> tokenize(const std::string& text);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace emphi
