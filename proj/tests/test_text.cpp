#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "dmsr/context_encoder.hpp"
#include "dmsr/errors.hpp"
#include "dmsr/tokenizer.hpp"
#include "doctest.h"

using namespace dmsr;

namespace {

ContextEncoderConfig small_config(int vocab_size) {
  ContextEncoderConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.max_tokens = 8;
  cfg.model_dim = 16;
  cfg.layers = 2;
  cfg.heads = 4;
  cfg.ffn_hidden = 24;
  cfg.dropout = 0.1f;
  return cfg;
}

nn::Tensor encode_once(const ContextEncoder& enc, const PromptTokenizer::Encoded& tokens,
                       bool training, uint64_t dropout_seed) {
  nn::Tape t;
  nn::Rng rng(dropout_seed);
  Context ctx = enc.encode(t, tokens, training, rng);
  return t.value(ctx.c);
}

}  // namespace

TEST_CASE("word splitting lowercases and drops punctuation") {
  auto w = PromptTokenizer::split_words("Hello, World! 90s-Rock (live)");
  CHECK(w == std::vector<std::string>{"hello", "world", "90s", "rock", "live"});
  CHECK(PromptTokenizer::split_words("...!!").empty());
}

TEST_CASE("vocabulary keeps words at or above the frequency floor") {
  std::vector<std::string> labels = {"calm jazz evening", "jazz for a calm morning",
                                     "loud rock evening"};
  PromptTokenizer tok = PromptTokenizer::build(labels, 8, 2);
  // calm x2, jazz x2, evening x2 survive; the rest map to unknown
  CHECK(tok.sorted_tokens() == std::vector<std::string>{"calm", "evening", "jazz"});
  CHECK(tok.vocab_size() == 6);  // 3 words + pad/unknown/start

  auto e = tok.encode("calm jazz piano");
  CHECK(e.ids[0] == PromptTokenizer::kStart);
  CHECK(e.ids[1] == 3);  // "calm", first sorted word
  CHECK(e.ids[2] == 5);  // "jazz"
  CHECK(e.ids[3] == PromptTokenizer::kUnknown);
  for (int i = 4; i < 8; ++i) {
    CHECK(e.ids[i] == PromptTokenizer::kPad);
    CHECK(!e.is_real[i]);
  }
  for (int i = 0; i < 4; ++i) CHECK(e.is_real[i]);
}

TEST_CASE("encoding truncates to max_tokens with the start token first") {
  PromptTokenizer tok = PromptTokenizer::build({"a b c d e f g h i j a b c d e f g h i j"}, 4, 1);
  auto e = tok.encode("a b c d e f g");
  CHECK(static_cast<int>(e.ids.size()) == 4);
  CHECK(e.ids[0] == PromptTokenizer::kStart);
  for (int i = 1; i < 4; ++i) CHECK(e.ids[i] >= 3);
  CHECK(e.is_real == std::vector<bool>{true, true, true, true});
}

TEST_CASE("vocab round-trips through its sorted list") {
  PromptTokenizer tok = PromptTokenizer::build({"zeta alpha beta zeta alpha beta"}, 6, 2);
  PromptTokenizer back = PromptTokenizer::from_vocab(tok.sorted_tokens(), 6);
  CHECK(back.vocab_size() == tok.vocab_size());
  auto a = tok.encode("alpha zeta unknownword");
  auto b = back.encode("alpha zeta unknownword");
  CHECK(a.ids == b.ids);
  CHECK(a.is_real == b.is_real);
  CHECK_THROWS_AS(PromptTokenizer::from_vocab({}, 0), ConfigError);
}

TEST_CASE("context encoder output is deterministic at inference") {
  PromptTokenizer tok = PromptTokenizer::build({"calm jazz calm jazz evening evening"}, 8, 1);
  nn::ParamRegistry reg;
  nn::Rng init(5);
  ContextEncoder enc(small_config(tok.vocab_size()), reg, init);
  auto tokens = tok.encode("calm jazz");
  nn::Tensor a = encode_once(enc, tokens, false, 1);
  nn::Tensor b = encode_once(enc, tokens, false, 999);  // dropout rng unused
  CHECK(a.data == b.data);
  CHECK(a.rows == 8);
  CHECK(a.cols == 16);
}

TEST_CASE("dropout perturbs training-mode encodings only") {
  PromptTokenizer tok = PromptTokenizer::build({"calm jazz calm jazz"}, 8, 1);
  nn::ParamRegistry reg;
  nn::Rng init(5);
  ContextEncoder enc(small_config(tok.vocab_size()), reg, init);
  auto tokens = tok.encode("calm jazz");
  nn::Tensor inference = encode_once(enc, tokens, false, 1);
  nn::Tensor train_a = encode_once(enc, tokens, true, 1);
  nn::Tensor train_b = encode_once(enc, tokens, true, 2);
  CHECK(train_a.data != inference.data);
  CHECK(train_a.data != train_b.data);
}

TEST_CASE("token order changes the encoding") {
  PromptTokenizer tok = PromptTokenizer::build({"calm jazz calm jazz"}, 8, 1);
  nn::ParamRegistry reg;
  nn::Rng init(7);
  ContextEncoder enc(small_config(tok.vocab_size()), reg, init);
  nn::Tensor ab = encode_once(enc, tok.encode("calm jazz"), false, 1);
  nn::Tensor ba = encode_once(enc, tok.encode("jazz calm"), false, 1);
  CHECK(ab.data != ba.data);
}

TEST_CASE("real positions are invariant to anything beyond the prompt") {
  // the additive mask must flag exactly the real positions, and a prompt's
  // encoding must depend only on its own ids
  PromptTokenizer tok = PromptTokenizer::build({"calm jazz night calm jazz night"}, 8, 1);
  nn::ParamRegistry reg;
  nn::Rng init(11);
  ContextEncoder enc(small_config(tok.vocab_size()), reg, init);
  auto short_tokens = tok.encode("calm jazz");
  auto long_tokens = tok.encode("calm jazz night");
  nn::Tensor a = encode_once(enc, short_tokens, false, 1);
  nn::Tensor b = encode_once(enc, long_tokens, false, 1);
  nn::Tape t;
  nn::Rng rng(1);
  Context ctx = enc.encode(t, short_tokens, false, rng);
  const nn::Tensor& mask = t.value(ctx.mask);
  REQUIRE(mask.rows == 1);
  REQUIRE(mask.cols == 8);
  for (int i = 0; i < 8; ++i) {
    if (short_tokens.is_real[i])
      CHECK(mask.at(0, i) == 0.0f);
    else
      CHECK(mask.at(0, i) <= -1e8f);
  }
  // and a trailing-pad perturbation cannot leak: encoding the same ids twice
  // gives identical rows everywhere
  nn::Tensor again = encode_once(enc, short_tokens, false, 1);
  CHECK(a.data == again.data);
  CHECK(a.data != b.data);
}
