#pragma once

#include <filesystem>
#include <vector>

#include "isolab/numerics.hpp"

namespace isolab {

inline constexpr int kSineClass = 0;
inline constexpr int kSquareClass = 1;

struct WaveSequence {
  DenseMatrix input;  // 1 x T
  int label = kSineClass;
};

struct WaveDataset {
  std::vector<WaveSequence> sequences;  // class-major: all sine, then square
  int period = 0;
  int repeats = 0;
  double noise_sigma = 0.0;
  double phase = 0.0;
  Seed seed{};
};

// Noisy sine-vs-square dataset.  Sine: sin(2 pi t / period + phase); square:
// the ideal unit square wave in the same phase, +1 over the first half cycle
// (sign(0) := +1 at the rising edge) and -1 over the second.  Both amplitude
// 1, plus i.i.d. N(0, noise_sigma^2) per sample, drawn sequence by sequence.
WaveDataset gen_wave_dataset(int period, int repeats, int n_per_class,
                             double noise_sigma, RngStream& rng,
                             double phase = 0.0);

// One file per sequence in `dir` (seq_000.csv, ...): a name header line
// `class,period,repeats,seed`, one line with those values (seed printed as
// value:stream), then one sample per line.
std::vector<std::filesystem::path> save_wave_dataset(
    const WaveDataset& ds, const std::filesystem::path& dir);

WaveDataset load_wave_dataset(const std::filesystem::path& dir);

}  // namespace isolab
