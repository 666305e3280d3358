// Copyright 2026 The Fairlens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "fairlens/corpus/planted.hpp"
#include "fairlens/digest.hpp"
#include "fairlens/jsonl.hpp"
#include "fairlens/model/checkpoint.hpp"
#include "fairlens/model/decoder.hpp"
#include "fairlens/model/prompt.hpp"
#include "test_support.hpp"

namespace fairlens::model {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "fairlens-model-io" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Prompt, YesNoParsing) {
  EXPECT_EQ(parse_yes_no("Yes"), Answer::kYes);
  EXPECT_EQ(parse_yes_no("  no, it is fine"), Answer::kNo);
  EXPECT_EQ(parse_yes_no("YES."), Answer::kYes);
  EXPECT_EQ(parse_yes_no("\n42 No"), Answer::kNo);
  try {
    parse_yes_no("Maybe yes");
    FAIL() << "expected UnparseableError";
  } catch (const UnparseableError& e) {
    EXPECT_EQ(e.continuation(), "Maybe yes");
  }
  EXPECT_THROW(parse_yes_no(""), UnparseableError);
}

TEST(Prompt, WordLists) {
  EXPECT_EQ(parse_word_list(" Black, people ,,STUPID "), (std::vector<std::string>{"black", "people", "stupid"}));
  EXPECT_TRUE(parse_word_list(" , ").empty());
}

TEST(Prompt, RenderingRules) {
  auto vocab = testing::race_vocab();
  auto e = testing::make_example("p", "black people are kind", Label::kNonToxic, vocab);
  PromptTemplate t;
  const auto zero = render_prompt(t, e);
  EXPECT_NE(zero.find("black people are kind"), std::string::npos);
  EXPECT_EQ(sentence_slot(zero), "black people are kind");

  t.mode = PromptMode::kFewShot;
  EXPECT_THROW(render_prompt(t, e), ConfigError);
  t.shots = {{"you are an idiot", Label::kToxic}, {"have a nice day", Label::kNonToxic}};
  const auto few = render_prompt(t, e);
  EXPECT_LT(few.find("you are an idiot"), few.find("black people are kind"));
  EXPECT_EQ(sentence_slot(few), "black people are kind");

  t = {};
  t.mode = PromptMode::kSelfReflection;
  t.bias_type = "race";
  EXPECT_THROW(render_prompt(t, e), ConfigError);
  const auto reflection = render_prompt(t, e, Answer::kNo);
  EXPECT_EQ(reflection.rfind(self_reflection_instruction("race")),
            reflection.size() - self_reflection_instruction("race").size());
  t.mode = PromptMode::kSelfAttribution;
  t.num_tokens = 0;
  EXPECT_THROW(render_prompt(t, e, Answer::kYes), ConfigError);
}

TEST(Prompt, FewShotsAreDeterministicAndComplete) {
  auto pool = corpus::generate_planted(40, {}, 3);
  auto vocab = corpus::planted_vocabulary();
  auto a = build_few_shots(pool, vocab, 5);
  auto b = build_few_shots(pool, vocab, 5);
  ASSERT_EQ(a.size(), 2 * vocab.groups().size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].text, b[i].text);
  std::vector<corpus::Example> only_toxic;
  for (const auto& e : pool) {
    if (e.label == Label::kToxic) only_toxic.push_back(e);
  }
  try {
    build_few_shots(only_toxic, vocab, 5);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("group_"), std::string::npos);
  }
}

TEST(Decoder, ReferenceBackedMatchesItsClassifier) {
  auto examples = corpus::generate_planted(20, {}, 4);
  auto vocab = corpus::planted_vocabulary();
  auto words = ReferenceModel::build_vocabulary(examples, vocab.all_terms());
  ReferenceConfig cfg;
  cfg.dim = 16;
  cfg.heads = 2;
  cfg.layers = 1;
  cfg.ff_dim = 32;
  cfg.init_std = 0.3;
  auto ref = ReferenceModel::create(words, cfg, 8);
  auto terms = vocab.all_terms();
  auto backend = std::make_shared<ReferenceBackedBackend>(ref, std::set<std::string>(terms.begin(), terms.end()));
  PromptedDecoder decoder(backend, {});
  EXPECT_EQ(decoder.kind(), ModelKind::kDecoder);
  for (const auto& e : examples) {
    const auto p = decoder.predict_proba(e.tokens);
    const auto q = ref.predict_proba(e.tokens);
    EXPECT_NEAR(p.toxic, q.toxic, 1e-12);
    EXPECT_EQ(decoder.classify(e), q.argmax() == Label::kToxic ? Answer::kYes : Answer::kNo);
  }
  PromptTemplate follow;
  follow.mode = PromptMode::kSelfAttribution;
  follow.num_tokens = 3;
  EXPECT_EQ(parse_word_list(decoder.follow_up(examples[0], follow)).size(), 3u);
}

TEST(Decoder, ReplayAnswersRecordedPromptsAndExportsMissing) {
  auto dir = scratch("replay");
  auto vocab = testing::race_vocab();
  auto known = testing::make_example("k", "black people are kind", Label::kNonToxic, vocab);
  auto unknown = testing::make_example("u", "black people are stupid", Label::kToxic, vocab);
  const auto prompt = render_prompt({}, known);
  write_jsonl(dir / "replay.jsonl",
              {Json{{"prompt_digest", short_digest(prompt)}, {"yes_logit", 0.0}, {"no_logit", std::log(3.0)},
                    {"continuation", "No"}}});
  auto backend = std::make_shared<ReplayBackend>(dir / "replay.jsonl");
  PromptedDecoder decoder(backend, {});
  EXPECT_NEAR(decoder.predict_proba(known.tokens).toxic, 0.25, 1e-12);
  EXPECT_THROW(decoder.predict_proba(unknown.tokens), DataError);
  EXPECT_EQ(backend->missing_count(), 1u);
  backend->export_missing(dir / "missing.jsonl");
  auto missing = read_jsonl(dir / "missing.jsonl");
  ASSERT_EQ(missing.size(), 1u);
  EXPECT_EQ(missing[0].at("prompt_digest"), short_digest(render_prompt({}, unknown)));
}

TEST(Checkpoint, RoundTripIsBitExact) {
  auto dir = scratch("ckpt");
  auto model = testing::small_model(4);
  CheckpointStore store(dir);
  store.save("run", 10, model);
  store.save("run", 2, model);
  EXPECT_EQ(store.steps("run"), (std::vector<int>{2, 10}));
  auto back = store.load("run", 10);
  EXPECT_EQ(back.digest(), model.digest());
  EXPECT_EQ(back.vocabulary(), model.vocabulary());
  ASSERT_EQ(back.num_parameters(), model.num_parameters());
  for (std::size_t i = 0; i < model.num_parameters(); ++i) EXPECT_EQ(back.parameters()[i], model.parameters()[i]);
}

TEST(Checkpoint, RejectsForeignAndTruncatedFiles) {
  auto dir = scratch("bad");
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  EXPECT_THROW(read_checkpoint(dir / "junk.ckpt"), DataError);
  write_checkpoint(dir / "ok.ckpt", testing::small_model(5));
  const auto size = fs::file_size(dir / "ok.ckpt");
  fs::resize_file(dir / "ok.ckpt", size / 2);
  EXPECT_THROW(read_checkpoint(dir / "ok.ckpt"), DataError);
  EXPECT_THROW(read_checkpoint(dir / "absent.ckpt"), DataError);
}

}  // namespace
}  // namespace fairlens::model
