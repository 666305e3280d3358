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

#ifndef FAIRLENS_CORPUS_COUNTERFACTUAL_HPP_
#define FAIRLENS_CORPUS_COUNTERFACTUAL_HPP_

#include <map>
#include <string>

#include "fairlens/corpus/example.hpp"
#include "fairlens/corpus/vocabulary.hpp"

namespace fairlens::corpus {

struct CounterfactualSet {
  Example original;
  std::map<std::string, Example> variants;  // target group -> rewritten example
};

// Rewrites `e` into `target_group`: each sensitive span's surface text is
// replaced by its substitution, the text re-tokenized and spans re-located.
// A capitalized first letter on the original surface carries over.
Example rewrite_to_group(const Example& e, const GroupVocabulary& vocab,
                         const std::string& target_group);

// One variant per group other than e.group. Throws DataError naming the term
// and target group when a substitution pair is missing.
CounterfactualSet counterfactuals(const Example& e, const GroupVocabulary& vocab);

}  // namespace fairlens::corpus

#endif  // FAIRLENS_CORPUS_COUNTERFACTUAL_HPP_
