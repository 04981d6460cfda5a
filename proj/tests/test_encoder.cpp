#include <cmath>

#include "doctest.h"
#include "emd/model.hpp"
#include "emd/synth.hpp"
#include "emd/vocab.hpp"

using namespace emd;

namespace {

struct Fixture {
  SynthResult synth;
  Vocab vocab;
  Fixture() {
    SynthConfig cfg;
    cfg.n_domains = 2;
    cfg.n_dialogues = 4;
    synth = generate_synthetic(cfg, 21);
    vocab = Vocab::build(synth.corpus, synth.ontology);
  }
  Model<double> make_model(int d = 8, uint64_t seed = 5) const {
    EncoderConfig ec;
    ec.hidden = d;
    ec.layers = 2;
    ec.heads = 2;
    ec.max_len = 32;
    Model<double> m(ec, vocab, synth.ontology);
    m.init_params(seed);
    return m;
  }
};

}  // namespace

TEST_CASE("encoder shape contract: h_tokens rows = token count - 1") {
  Fixture f;
  auto model = f.make_model();
  for (const char* usr : {"set the area to amber .", "", "one two three four"}) {
    Graph<double> g;
    auto enc = model.encode(g, turn_tokens("hello", usr));
    CHECK(g.val(enc.h_tokens).rows == static_cast<int>(enc.tokens.size()) - 1);
    CHECK(g.val(enc.h_cls).rows == 1);
    CHECK(g.val(enc.h_cls).cols == 8);
    CHECK(g.val(enc.h_tokens).all_finite());
  }
}

TEST_CASE("zeroed parameters make every position identical") {
  Fixture f;
  auto model = f.make_model();
  for (const auto& p : model.store().all()) p->val.zero();
  Graph<double> g;
  auto enc = model.encode(g, turn_tokens("hello there", "set the area to amber"));
  const Mat<double>& h = g.val(enc.h_tokens);
  const Mat<double>& cls = g.val(enc.h_cls);
  for (int i = 0; i < h.rows; ++i)
    for (int j = 0; j < h.cols; ++j) CHECK(h.at(i, j) == cls.at(0, j));
}

TEST_CASE("perturbing one user token changes h_cls") {
  Fixture f;
  auto model = f.make_model();
  // Both replacement words are in-vocab slot words.
  REQUIRE(f.vocab.id("area") != Vocab::kUnk);
  REQUIRE(f.vocab.id("brand") != Vocab::kUnk);
  Graph<double> g1, g2;
  auto e1 = model.encode(g1, turn_tokens("hello", "set the area please"));
  auto e2 = model.encode(g2, turn_tokens("hello", "set the brand please"));
  double delta = 0;
  for (int j = 0; j < 8; ++j)
    delta += std::abs(g1.val(e1.h_cls).at(0, j) - g2.val(e2.h_cls).at(0, j));
  CHECK(delta > 1e-9);
}

TEST_CASE("overlong input truncates and counts") {
  Fixture f;
  auto model = f.make_model();
  std::string usr;
  for (int i = 0; i < 100; ++i) usr += "word ";
  Graph<double> g;
  auto enc = model.encode(g, turn_tokens("sys", usr));
  CHECK(enc.truncated > 0);
  CHECK(static_cast<int>(enc.tokens.size()) == 32);
  CHECK(enc.tokens.back() == "[SEP]");
}

TEST_CASE("embed_label is the mean of embedding rows") {
  Fixture f;
  auto model = f.make_model();
  const Mat<double> single = model.embed_label_frozen("area");
  const int id = f.vocab.id("area");
  REQUIRE(id != Vocab::kUnk);
  for (int j = 0; j < 8; ++j)
    CHECK(single.at(0, j) ==
          model.store().find("embed.token")->val.at(id, j));

  const Mat<double> pair = model.embed_label_frozen("area brand");
  const int id2 = f.vocab.id("brand");
  REQUIRE(id2 != Vocab::kUnk);
  for (int j = 0; j < 8; ++j) {
    const double expect = 0.5 * (model.store().find("embed.token")->val.at(id, j) +
                                 model.store().find("embed.token")->val.at(id2, j));
    CHECK(pair.at(0, j) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("embed_label routes unknown words to the UNK row") {
  Fixture f;
  auto model = f.make_model();
  const Mat<double> unk = model.embed_label_frozen("zzzunknownzzz");
  for (int j = 0; j < 8; ++j)
    CHECK(unk.at(0, j) == model.store().find("embed.token")->val.at(Vocab::kUnk, j));
}

TEST_CASE("E(.) is gradient-opaque: no gradient reaches embeddings through it") {
  Fixture f;
  auto model = f.make_model();
  Graph<double> g;
  // A loss built solely from E(.) constants and a head weight.
  auto e_dl = model.domain_embedding_node(g, std::nullopt);
  auto e_lbl = g.constant(model.embed_label_frozen("amber"));
  auto h_fake = g.constant(model.embed_label_frozen("basil"));
  auto logits = model.ctype_logits(g, model.ontology().ctype.begin()->second.front(), e_dl,
                                   h_fake);
  (void)e_lbl;
  model.store().zero_grads();
  g.backward(g.softmax_ce(logits, {0}));
  const Param<double>* emb = model.store().find("embed.token");
  for (double v : emb->grad.data) CHECK(v == 0.0);
  // The head weight itself does receive gradient.
  double head_grad = 0;
  for (double v : model.store().find("head.ctype.w")->grad.data) head_grad += std::abs(v);
  CHECK(head_grad > 0);
}

TEST_CASE("previous-domain embedding is wired into the domain head") {
  Fixture f;
  auto model = f.make_model();
  const auto& domains = f.synth.ontology.domains;

  // Same utterance, different previous domain: prediction inputs differ.
  Graph<double> g;
  auto enc = model.encode(g, turn_tokens("hello", "set the area please"));
  auto e_none = model.domain_embedding_node(g, std::nullopt);
  auto e_dom = model.domain_embedding_node(g, domains[0]);
  const Mat<double>& l1 = g.val(model.domain_logits(g, enc.h_cls, e_none));
  const Mat<double>& l2 = g.val(model.domain_logits(g, enc.h_cls, e_dom));
  double delta = 0;
  for (size_t i = 0; i < l1.data.size(); ++i) delta += std::abs(l1.data[i] - l2.data[i]);
  CHECK(delta > 1e-9);

  // Gradient of the domain loss w.r.t. the E(D_l) slice of the head weight
  // (rows d..2d-1) is non-zero.
  model.store().zero_grads();
  Graph<double> g2;
  auto enc2 = model.encode(g2, turn_tokens("hello", "set the area please"));
  auto logits = model.domain_logits(g2, enc2.h_cls,
                                    model.domain_embedding_node(g2, domains[1]));
  g2.backward(g2.softmax_ce(logits, {0}));
  const Param<double>* wd = model.store().find("head.domain.w");
  double slice_grad = 0;
  for (int i = 8; i < 16; ++i)
    for (int j = 0; j < wd->grad.cols; ++j) slice_grad += std::abs(wd->grad.at(i, j));
  CHECK(slice_grad > 0);
}

TEST_CASE("seeded init is deterministic") {
  Fixture f;
  auto m1 = f.make_model(8, 77);
  auto m2 = f.make_model(8, 77);
  for (size_t i = 0; i < m1.store().all().size(); ++i)
    CHECK(m1.store().all()[i]->val.data == m2.store().all()[i]->val.data);
}

TEST_CASE("vocab round-trips through its token list") {
  Fixture f;
  const Vocab back = Vocab::from_tokens(f.vocab.tokens());
  CHECK(back == f.vocab);
  CHECK(back.id("amber") == f.vocab.id("amber"));
  CHECK(back.domain_id(f.synth.ontology.domains[0]) ==
        f.vocab.domain_id(f.synth.ontology.domains[0]));
  CHECK(back.num_reserved() == f.vocab.num_reserved());
}
