#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace emd {

inline constexpr const char* kClsToken = "[CLS]";
inline constexpr const char* kSepToken = "[SEP]";
inline constexpr const char* kPadToken = "[PAD]";
inline constexpr const char* kUnkToken = "[UNK]";
inline constexpr const char* kNoneDomainToken = "[NONE_DOMAIN]";

// Lowercased word tokens: runs of [a-z0-9] are words, whitespace separates,
// any other byte becomes its own single-char token.
std::vector<std::string> word_tokens(std::string_view text);

// [CLS] sys-tokens [SEP] usr-tokens [SEP]
std::vector<std::string> turn_tokens(std::string_view sys, std::string_view usr);

// Overlong turns lose their trailing (user-side) tokens; the final [SEP] is
// preserved. Returns the number of tokens dropped.
int truncate_turn_tokens(std::vector<std::string>& tokens, int max_len);

bool is_marker_token(const std::string& tok);

// Lowercase + collapse internal whitespace; used wherever values are compared.
std::string normalize_value(std::string_view v);

}  // namespace emd
