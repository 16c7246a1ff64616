// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "mixmc/model.hpp"

namespace mixmc {

struct FixedLength {
  std::size_t length;
};

/// Length drawn uniformly from [min, max].
struct LengthRange {
  std::size_t min;
  std::size_t max;
};

struct SynthConfig {
  std::size_t n_sequences = 1000;
  std::variant<FixedLength, LengthRange> lengths = FixedLength{20};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthSample {
  SequenceDataset dataset;
  std::vector<std::size_t> labels;  // generating cluster of each sequence
};

/// Ancestral sampling: cluster i ~ p, then s_1 ~ f_i, then s_{t+1} ~ T_i(s_t, .).
/// Each sequence gets its own synthetic user id ("synth-000001", ...), city
/// "synthetic" and week 1970-W01. Draw order per sequence: length (ranges
/// only), cluster, states. Identical seeds give identical output.
SynthSample sample(const MixtureModel& model, const SynthConfig& config);

}  // namespace mixmc
