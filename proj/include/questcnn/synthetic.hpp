#pragma once

#include <cstdint>

#include "questcnn/corpus.hpp"

namespace questcnn::synthetic {

// Three classes keyed by disjoint cue words; trivially separable.
Dataset separable(std::size_t n, std::uint64_t seed);

// Labels depend on word order ("is it" vs "it is") and on the POS of a
// freshly invented content word (-ing form vs noun). Bag-of-words models
// cannot see the order cue and word-identity models cannot generalize the
// POS cue to unseen content words.
Dataset order_pos_task(std::size_t n, std::uint64_t seed);

// Review-dialogue style sentences with question, c-question and
// non-question labels, roughly following the reference corpus shape
// (about one fifth question-like, c-questions short and demonstrative).
Dataset dialogue_corpus(std::size_t n, std::uint64_t seed);

}  // namespace questcnn::synthetic
