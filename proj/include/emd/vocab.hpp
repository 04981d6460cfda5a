#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "emd/corpus.hpp"
#include "emd/ontology.hpp"

namespace emd {

// Token table. Reserved head: [PAD] [UNK] [CLS] [SEP] [NONE_DOMAIN], then one
// pseudo-token per domain, then regular tokens in sorted order.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kNoneDomain = 4;

  Vocab() = default;

  // Collects every utterance token in the corpus plus domain, slot and
  // C-type class words from the ontology.
  static Vocab build(const Corpus& corpus, const Ontology& onto);
  static Vocab from_tokens(std::vector<std::string> tokens);  // checkpoint path

  int id(const std::string& token) const;  // [UNK] for unknowns
  int domain_id(const std::string& domain) const;
  std::vector<int> ids(const std::vector<std::string>& tokens) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const { return tokens_[id]; }
  int num_reserved() const { return num_reserved_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  void index_all();
  static std::string domain_pseudo_token(const std::string& domain);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int num_reserved_ = 0;
};

}  // namespace emd
