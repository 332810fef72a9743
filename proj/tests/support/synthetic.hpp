#pragma once

#include <string>

#include "lscd/corpus.hpp"
#include "lscd/rng.hpp"

namespace synth {

/// Sentences of 6-12 words drawn uniformly from a shared vocabulary. When
/// `marker` is non-empty it is inserted at a random position of every sentence.
inline lscd::Corpus random_corpus(lscd::Rng& rng, std::size_t sentences, lscd::Period period,
                                  const std::string& marker = {}, int vocab = 300) {
  lscd::Corpus c;
  c.period = period;
  for (std::size_t i = 0; i < sentences; ++i) {
    lscd::Sentence s;
    const auto len = 6 + rng.index(7);
    for (std::uint64_t k = 0; k < len; ++k) s.push_back("v" + std::to_string(rng.index(static_cast<std::uint64_t>(vocab))));
    if (!marker.empty()) s.insert(s.begin() + static_cast<std::ptrdiff_t>(rng.index(s.size() + 1)), marker);
    c.sentences.push_back(std::move(s));
  }
  return c;
}

}  // namespace synth
