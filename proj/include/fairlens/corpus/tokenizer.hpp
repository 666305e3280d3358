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

#ifndef FAIRLENS_CORPUS_TOKENIZER_HPP_
#define FAIRLENS_CORPUS_TOKENIZER_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fairlens::corpus {

struct Token {
  std::string text;  // lowercased surface
  std::size_t begin = 0;  // byte offsets into the raw text, [begin, end)
  std::size_t end = 0;
};

// Word-level tokenizer shared by corpus matching and the reference model.
// Words are maximal runs of ASCII alphanumerics or non-ASCII bytes, with an
// apostrophe kept when it sits between two word characters. Every other
// non-space byte is a single-character token. Output is lowercased.
std::vector<Token> tokenize(std::string_view text);

std::vector<std::string> token_texts(std::string_view text);

std::string to_lower(std::string_view text);

}  // namespace fairlens::corpus

#endif  // FAIRLENS_CORPUS_TOKENIZER_HPP_
