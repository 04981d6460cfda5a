#include "emd/tokenize.hpp"

#include <cctype>

namespace emd {

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c)) {
      flush();
    } else {
      flush();
      out.push_back(std::string(1, ch));
    }
  }
  flush();
  return out;
}

std::vector<std::string> turn_tokens(std::string_view sys, std::string_view usr) {
  std::vector<std::string> out;
  out.push_back(kClsToken);
  for (auto& t : word_tokens(sys)) out.push_back(std::move(t));
  out.push_back(kSepToken);
  for (auto& t : word_tokens(usr)) out.push_back(std::move(t));
  out.push_back(kSepToken);
  return out;
}

int truncate_turn_tokens(std::vector<std::string>& tokens, int max_len) {
  if (static_cast<int>(tokens.size()) <= max_len) return 0;
  const int dropped = static_cast<int>(tokens.size()) - max_len;
  tokens.resize(static_cast<size_t>(max_len) - 1);
  tokens.push_back(kSepToken);
  return dropped;
}

bool is_marker_token(const std::string& tok) {
  return tok == kClsToken || tok == kSepToken || tok == kPadToken || tok == kUnkToken;
}

std::string normalize_value(std::string_view v) {
  std::string out;
  bool pending_space = false;
  for (char ch : v) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
    } else {
      if (pending_space) {
        out.push_back(' ');
        pending_space = false;
      }
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return out;
}

}  // namespace emd
