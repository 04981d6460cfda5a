#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "emd/autodiff.hpp"
#include "emd/heads.hpp"
#include "emd/ontology.hpp"
#include "emd/rng.hpp"
#include "emd/tokenize.hpp"
#include "emd/vocab.hpp"

#include "json.hpp"

namespace emd {

struct EncoderConfig {
  int hidden = 64;  // d; 1024 reproduces full scale
  int layers = 2;
  int heads = 4;
  int ffn_mult = 4;
  int max_len = 128;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;

  nlohmann::ordered_json to_json() const {
    return {{"hidden", hidden}, {"layers", layers}, {"heads", heads},
            {"ffn_mult", ffn_mult}, {"max_len", max_len}};
  }
  static EncoderConfig from_json(const nlohmann::json& j) {
    EncoderConfig c;
    c.hidden = j.value("hidden", c.hidden);
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.ffn_mult = j.value("ffn_mult", c.ffn_mult);
    c.max_len = j.value("max_len", c.max_len);
    return c;
  }
};

// The shared turn encoder (pre-norm transformer stack) plus the four head
// weight matrices, all under one ParamStore. T is float for training and
// inference, double for finite-difference gradient verification.
template <typename T>
class Model {
 public:
  using Ref = typename Graph<T>::Ref;

  Model(EncoderConfig cfg, Vocab vocab, Ontology onto)
      : cfg_(cfg), vocab_(std::move(vocab)), onto_(std::move(onto)) {
    if (cfg_.hidden % cfg_.heads != 0)
      throw std::invalid_argument("hidden size must be divisible by head count");
    const int d = cfg_.hidden;
    const int s = onto_.num_stype();
    tok_emb_ = &store_.add("embed.token", vocab_.size(), d);
    pos_emb_ = &store_.add("embed.pos", cfg_.max_len, d);
    layers_.resize(cfg_.layers);
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "enc." + std::to_string(l) + ".";
      auto& L = layers_[l];
      L.ln1_g = &store_.add(p + "ln1.g", 1, d);
      L.ln1_b = &store_.add(p + "ln1.b", 1, d);
      L.wq = &store_.add(p + "attn.wq", d, d);
      L.bq = &store_.add(p + "attn.bq", 1, d);
      // No key bias: softmax is invariant to a constant shift across a
      // row's scores, so a key bias is an unlearnable dead parameter.
      L.wk = &store_.add(p + "attn.wk", d, d);
      L.wv = &store_.add(p + "attn.wv", d, d);
      L.bv = &store_.add(p + "attn.bv", 1, d);
      L.wo = &store_.add(p + "attn.wo", d, d);
      L.bo = &store_.add(p + "attn.bo", 1, d);
      L.ln2_g = &store_.add(p + "ln2.g", 1, d);
      L.ln2_b = &store_.add(p + "ln2.b", 1, d);
      L.w1 = &store_.add(p + "ffn.w1", d, d * cfg_.ffn_mult);
      L.b1 = &store_.add(p + "ffn.b1", 1, d * cfg_.ffn_mult);
      L.w2 = &store_.add(p + "ffn.w2", d * cfg_.ffn_mult, d);
      L.b2 = &store_.add(p + "ffn.b2", 1, d);
    }
    final_ln_g_ = &store_.add("enc.final_ln.g", 1, d);
    final_ln_b_ = &store_.add("enc.final_ln.b", 1, d);
    w_domain_ = &store_.add("head.domain.w", 2 * d, static_cast<int>(onto_.domains.size()));
    w_constraint_ = &store_.add("head.constraint.w", 2 * d, s + 1);
    w_tag_ = &store_.add("head.tag.w", d, iob_label_count(s));
    w_ctype_ = &store_.add("head.ctype.w", 3 * d, 4);
    w_correct_ = &store_.add("head.correct.w", 3 * d, 1);
  }

  // Seeded uniform Xavier init: weights U(+-sqrt(6/(fan_in+fan_out))),
  // biases zero, layer-norm gains one.
  void init_params(uint64_t seed) {
    Rng rng(seed);
    for (const auto& p : store_.all()) {
      const bool is_gain = p->name.ends_with("ln1.g") || p->name.ends_with("ln2.g") ||
                           p->name.ends_with("final_ln.g");
      const bool is_bias = p->val.rows == 1 && !is_gain;
      if (is_gain) {
        p->val.fill(T(1));
      } else if (is_bias) {
        p->val.zero();
      } else {
        const double lim = std::sqrt(6.0 / (p->val.rows + p->val.cols));
        for (auto& v : p->val.data) v = static_cast<T>(rng.uniform(-lim, lim));
      }
    }
  }

  const EncoderConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  const Ontology& ontology() const { return onto_; }
  ParamStore<T>& store() { return store_; }
  const ParamStore<T>& store() const { return store_; }

  int domain_index(const std::string& domain) const {
    auto it = std::lower_bound(onto_.domains.begin(), onto_.domains.end(), domain);
    if (it == onto_.domains.end() || *it != domain)
      throw std::invalid_argument("unknown domain: " + domain);
    return static_cast<int>(it - onto_.domains.begin());
  }

  struct Encoded {
    std::vector<std::string> tokens;  // after truncation
    Ref h_cls = -1;                   // 1 x d
    Ref h_tokens = -1;                // n x d, n = tokens.size() - 1
    int truncated = 0;
  };

  Encoded encode(Graph<T>& g, std::vector<std::string> tokens) {
    Encoded enc;
    // Tokens run [CLS] sys [SEP] usr [SEP]; cutting from the back drops
    // user-side tokens first.
    enc.truncated = truncate_turn_tokens(tokens, cfg_.max_len);
    const int n_total = static_cast<int>(tokens.size());
    std::vector<int> pos_ids(n_total);
    for (int i = 0; i < n_total; ++i) pos_ids[i] = i;
    Ref x = g.add(g.gather_rows(*tok_emb_, vocab_.ids(tokens)),
                  g.gather_rows(*pos_emb_, pos_ids));
    for (auto& L : layers_) {
      Ref xn = g.layer_norm(x, g.param(*L.ln1_g), g.param(*L.ln1_b));
      Ref att = attention(g, xn, L);
      x = g.add(x, att);
      Ref xn2 = g.layer_norm(x, g.param(*L.ln2_g), g.param(*L.ln2_b));
      Ref h1 = g.gelu(g.add_row(g.matmul(xn2, g.param(*L.w1)), g.param(*L.b1)));
      Ref h2 = g.add_row(g.matmul(h1, g.param(*L.w2)), g.param(*L.b2));
      x = g.add(x, h2);
    }
    x = g.layer_norm(x, g.param(*final_ln_g_), g.param(*final_ln_b_));
    enc.h_cls = g.slice_rows(x, 0, 1);
    enc.h_tokens = g.slice_rows(x, 1, n_total - 1);
    enc.tokens = std::move(tokens);
    return enc;
  }

  // --- E(.): frozen mean-pooled embedding read-out. Values are copied out
  // of the table, so no gradient ever flows back through this path.

  // Pins the table the E(.) read-out sees. Finite-difference checks need
  // this: perturbing the live table must not move the stop-gradient
  // constants, or the comparison would differentiate a different function
  // than backward does.
  void freeze_label_embeddings() { label_snapshot_ = tok_emb_->val; }
  void unfreeze_label_embeddings() { label_snapshot_.reset(); }

  Mat<T> embed_words_frozen(const std::vector<std::string>& words) const {
    const Mat<T>& table = label_snapshot_ ? *label_snapshot_ : tok_emb_->val;
    const int d = cfg_.hidden;
    Mat<T> out(1, d);
    if (words.empty()) {
      const T* row = table.row_ptr(Vocab::kUnk);
      std::copy(row, row + d, out.data.begin());
      return out;
    }
    for (const auto& w : words) {
      const T* row = table.row_ptr(vocab_.id(w));
      for (int j = 0; j < d; ++j) out.data[j] += row[j];
    }
    const T inv = T(1) / static_cast<T>(words.size());
    for (auto& v : out.data) v *= inv;
    return out;
  }

  Mat<T> embed_label_frozen(const std::string& text) const {
    return embed_words_frozen(word_tokens(text));
  }

  Mat<T> embed_domain_frozen(const std::optional<std::string>& domain) const {
    const Mat<T>& table = label_snapshot_ ? *label_snapshot_ : tok_emb_->val;
    const int d = cfg_.hidden;
    Mat<T> out(1, d);
    const int id = domain ? vocab_.domain_id(*domain) : Vocab::kNoneDomain;
    const T* row = table.row_ptr(id);
    std::copy(row, row + d, out.data.begin());
    return out;
  }

  // p-hat: the embedding sum of the triplet's three items, each mean-pooled
  // over its tokens first.
  Mat<T> embed_triplet_frozen(const Triplet& p) const {
    Mat<T> out = embed_domain_frozen(p.domain);
    const Mat<T> slot = embed_label_frozen(p.slot);
    const Mat<T> value = embed_label_frozen(p.value);
    for (size_t j = 0; j < out.data.size(); ++j) out.data[j] += slot.data[j] + value.data[j];
    return out;
  }

  // --- Heads. All return logits; softmax/sigmoid is applied by the caller.

  Ref domain_logits(Graph<T>& g, Ref h_cls, Ref e_dl) {
    return g.matmul(g.concat_cols({h_cls, e_dl}), g.param(*w_domain_));
  }

  Ref constraint_logits(Graph<T>& g, Ref h_cls, Ref e_dl) {
    return g.matmul(g.concat_cols({h_cls, e_dl}), g.param(*w_constraint_));
  }

  Ref tag_logits(Graph<T>& g, Ref h_tokens) { return g.matmul(h_tokens, g.param(*w_tag_)); }

  Ref ctype_logits(Graph<T>& g, const std::string& qualified_slot, Ref e_dl, Ref h_cls) {
    auto [dom, base] = split_qualified(qualified_slot);
    Ref e_slot = g.constant(embed_label_frozen(dom + " " + base));
    return g.matmul(g.concat_cols({e_slot, e_dl, h_cls}), g.param(*w_ctype_));
  }

  Ref correct_logit(Graph<T>& g, const Triplet& p, Ref e_dl, Ref h_cls) {
    Ref p_hat = g.constant(embed_triplet_frozen(p));
    return g.matmul(g.concat_cols({p_hat, e_dl, h_cls}), g.param(*w_correct_));
  }

  Ref domain_embedding_node(Graph<T>& g, const std::optional<std::string>& domain) const {
    return g.constant(embed_domain_frozen(domain));
  }

 private:
  struct Layer {
    Param<T>*ln1_g, *ln1_b, *wq, *bq, *wk, *wv, *bv, *wo, *bo;
    Param<T>*ln2_g, *ln2_b, *w1, *b1, *w2, *b2;
  };

  Ref attention(Graph<T>& g, Ref xn, Layer& L) {
    const int d = cfg_.hidden;
    const int dh = d / cfg_.heads;
    Ref q = g.add_row(g.matmul(xn, g.param(*L.wq)), g.param(*L.bq));
    Ref k = g.matmul(xn, g.param(*L.wk));
    Ref v = g.add_row(g.matmul(xn, g.param(*L.wv)), g.param(*L.bv));
    std::vector<Ref> heads;
    const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    for (int h = 0; h < cfg_.heads; ++h) {
      Ref qh = g.slice_cols(q, h * dh, dh);
      Ref kh = g.slice_cols(k, h * dh, dh);
      Ref vh = g.slice_cols(v, h * dh, dh);
      Ref scores = g.scale(g.matmul(qh, kh, false, true), inv_sqrt);
      Ref attn = g.softmax_rows(scores);
      heads.push_back(g.matmul(attn, vh));
    }
    return g.add_row(g.matmul(g.concat_cols(heads), g.param(*L.wo)), g.param(*L.bo));
  }

  EncoderConfig cfg_;
  Vocab vocab_;
  Ontology onto_;
  ParamStore<T> store_;
  std::optional<Mat<T>> label_snapshot_;
  Param<T>* tok_emb_;
  Param<T>* pos_emb_;
  std::vector<Layer> layers_;
  Param<T>*final_ln_g_, *final_ln_b_;
  Param<T>*w_domain_, *w_constraint_, *w_tag_, *w_ctype_, *w_correct_;
};

}  // namespace emd
