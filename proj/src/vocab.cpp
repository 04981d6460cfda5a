#include "emd/vocab.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "emd/tokenize.hpp"

namespace emd {

std::string Vocab::domain_pseudo_token(const std::string& domain) {
  return "[domain:" + domain + "]";
}

Vocab Vocab::build(const Corpus& corpus, const Ontology& onto) {
  std::set<std::string> words;
  for (const auto& d : corpus) {
    for (const auto& t : d.turns) {
      for (auto& w : word_tokens(t.sys)) words.insert(std::move(w));
      for (auto& w : word_tokens(t.usr)) words.insert(std::move(w));
    }
  }
  // Label words used by E(.): domain names, slot words, class words, and the
  // value words of gold triplets (C-type classes and ingested values).
  for (const auto& dom : onto.domains)
    for (auto& w : word_tokens(dom)) words.insert(std::move(w));
  auto add_slot_words = [&](const std::string& qualified) {
    auto [d, s] = split_qualified(qualified);
    for (auto& w : word_tokens(d)) words.insert(std::move(w));
    for (auto& w : word_tokens(s)) words.insert(std::move(w));
  };
  for (const auto& q : onto.stype) add_slot_words(q);
  for (const auto& [d, slots] : onto.ctype)
    for (const auto& q : slots) add_slot_words(q);
  for (const char* w : {"yes", "no", "dontcare"}) words.insert(w);
  for (const auto& d : corpus)
    for (const auto& t : d.turns)
      for (const auto* list : {&t.gold_adds, &t.gold_removes})
        for (const auto& tr : *list)
          for (auto& w : word_tokens(tr.value)) words.insert(std::move(w));

  Vocab v;
  v.tokens_ = {kPadToken, kUnkToken, kClsToken, kSepToken, kNoneDomainToken};
  for (const auto& dom : onto.domains) v.tokens_.push_back(domain_pseudo_token(dom));
  v.num_reserved_ = static_cast<int>(v.tokens_.size());
  for (const auto& w : words) v.tokens_.push_back(w);
  v.index_all();
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  if (v.tokens_.size() < 5 || v.tokens_[kPad] != kPadToken || v.tokens_[kUnk] != kUnkToken ||
      v.tokens_[kCls] != kClsToken || v.tokens_[kSep] != kSepToken ||
      v.tokens_[kNoneDomain] != kNoneDomainToken)
    throw std::invalid_argument("vocab token list missing reserved header");
  int reserved = 5;
  while (reserved < static_cast<int>(v.tokens_.size()) &&
         v.tokens_[reserved].rfind("[domain:", 0) == 0)
    ++reserved;
  v.num_reserved_ = reserved;
  v.index_all();
  return v;
}

void Vocab::index_all() {
  index_.clear();
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) {
    if (!index_.emplace(tokens_[i], i).second)
      throw std::invalid_argument("duplicate vocab token: " + tokens_[i]);
  }
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

int Vocab::domain_id(const std::string& domain) const {
  auto it = index_.find(domain_pseudo_token(domain));
  return it == index_.end() ? kNoneDomain : it->second;
}

std::vector<int> Vocab::ids(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

}  // namespace emd
