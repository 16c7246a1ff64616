// Apache License, Version 2.0, refer to LICENSE.txt

#include "mixmc/synth.hpp"

#include <cstdio>

#include "mixmc/error.hpp"
#include "mixmc/random.hpp"

namespace mixmc {

void SynthConfig::validate() const {
  if (n_sequences < 1) throw InvalidInput("n_sequences must be at least 1");
  if (const auto* fixed = std::get_if<FixedLength>(&lengths)) {
    if (fixed->length < 1) throw InvalidInput("sequence length must be at least 1");
  } else {
    const auto& range = std::get<LengthRange>(lengths);
    if (range.min < 1 || range.max < range.min) throw InvalidInput("invalid length range");
  }
}

SynthSample sample(const MixtureModel& model, const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::vector<Sequence> sequences;
  std::vector<std::size_t> labels;
  sequences.reserve(config.n_sequences);
  labels.reserve(config.n_sequences);

  for (std::size_t n = 0; n < config.n_sequences; ++n) {
    std::size_t length;
    if (const auto* fixed = std::get_if<FixedLength>(&config.lengths)) {
      length = fixed->length;
    } else {
      const auto& range = std::get<LengthRange>(config.lengths);
      length = range.min + static_cast<std::size_t>(rng.below(range.max - range.min + 1));
    }
    const std::size_t cluster = rng.categorical(model.mixing());
    const ChainParams& chain = model.cluster(cluster);

    std::vector<State> states;
    states.reserve(length);
    states.push_back(static_cast<State>(rng.categorical(chain.initial())));
    while (states.size() < length)
      states.push_back(static_cast<State>(rng.categorical(chain.transition().row(states.back()))));

    char user[32];
    std::snprintf(user, sizeof user, "synth-%06zu", n + 1);
    sequences.push_back(Sequence{user, "synthetic", IsoWeek{1970, 1}, std::move(states)});
    labels.push_back(cluster);
  }
  return SynthSample{SequenceDataset(model.categories(), std::move(sequences)), std::move(labels)};
}

}  // namespace mixmc
