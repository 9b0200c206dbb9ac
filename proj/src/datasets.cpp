#include "isolab/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace isolab {

namespace {

double clean_wave(int label, int t, int period, double phase) {
  const double two_pi = 2.0 * std::numbers::pi;
  const int k = t % period;  // keeps the argument small at large t
  if (label == kSineClass)
    return std::sin(two_pi * double(k) / double(period) + phase);
  // Ideal square: +1 over the first half cycle (sign(0) := +1 at the rising
  // edge), -1 over the second.  Integer arithmetic when unshifted so the
  // half-period sample never wobbles on rounding.
  if (phase == 0.0) return 2 * k < period ? 1.0 : -1.0;
  double m = std::fmod(two_pi * double(k) / double(period) + phase, two_pi);
  if (m < 0) m += two_pi;
  return m < std::numbers::pi ? 1.0 : -1.0;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw IoError("format_double: conversion failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw IoError("invalid number '" + s + "' in " + context);
  return v;
}

}  // namespace

WaveDataset gen_wave_dataset(int period, int repeats, int n_per_class,
                             double noise_sigma, RngStream& rng, double phase) {
  if (period < 2) throw ValidationError("gen_wave_dataset: period must be >= 2");
  if (repeats < 1)
    throw ValidationError("gen_wave_dataset: repeats must be >= 1");
  if (n_per_class < 1)
    throw ValidationError("gen_wave_dataset: n_per_class must be >= 1");
  if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma))
    throw ValidationError("gen_wave_dataset: noise_sigma must be >= 0");
  WaveDataset ds;
  ds.period = period;
  ds.repeats = repeats;
  ds.noise_sigma = noise_sigma;
  ds.phase = phase;
  ds.seed = rng.seed();
  const int t_len = period * repeats;
  for (int label : {kSineClass, kSquareClass}) {
    for (int s = 0; s < n_per_class; ++s) {
      WaveSequence seq;
      seq.label = label;
      seq.input.resize(1, t_len);
      for (int t = 0; t < t_len; ++t) {
        double v = clean_wave(label, t, period, phase);
        if (noise_sigma > 0) v += rng.normal(0.0, noise_sigma);
        seq.input(0, t) = v;
      }
      ds.sequences.push_back(std::move(seq));
    }
  }
  return ds;
}

std::vector<std::filesystem::path> save_wave_dataset(
    const WaveDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "seq_%03zu.csv", i);
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const auto& seq = ds.sequences[i];
    out << "class,period,repeats,seed\n";
    out << seq.label << ',' << ds.period << ',' << ds.repeats << ','
        << ds.seed.value << ':' << ds.seed.stream << '\n';
    for (Index t = 0; t < seq.input.cols(); ++t)
      out << format_double(seq.input(0, t)) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
    paths.push_back(path);
  }
  return paths;
}

WaveDataset load_wave_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("dataset directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("seq_", 0) == 0 && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  if (files.empty())
    throw IoError("no seq_*.csv files in " + dir.string());
  std::sort(files.begin(), files.end());
  WaveDataset ds;
  bool first = true;
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string header, meta;
    if (!std::getline(in, header) || !std::getline(in, meta))
      throw IoError("truncated dataset file " + path.string());
    if (header != "class,period,repeats,seed")
      throw IoError("bad header in " + path.string() + ": '" + header + "'");
    std::istringstream ms(meta);
    std::string cls, period, repeats, seed;
    if (!std::getline(ms, cls, ',') || !std::getline(ms, period, ',') ||
        !std::getline(ms, repeats, ',') || !std::getline(ms, seed))
      throw IoError("bad metadata line in " + path.string());
    WaveSequence seq;
    seq.label = static_cast<int>(parse_double(cls, path.string()));
    const int p = static_cast<int>(parse_double(period, path.string()));
    const int r = static_cast<int>(parse_double(repeats, path.string()));
    const auto colon = seed.find(':');
    if (colon == std::string::npos)
      throw IoError("bad seed field in " + path.string());
    Seed sd{std::stoull(seed.substr(0, colon)),
            std::stoull(seed.substr(colon + 1))};
    if (first) {
      ds.period = p;
      ds.repeats = r;
      ds.seed = sd;
      first = false;
    } else if (p != ds.period || r != ds.repeats) {
      throw IoError("inconsistent metadata across files in " + dir.string());
    }
    std::vector<double> samples;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      samples.push_back(parse_double(line, path.string()));
    }
    if (samples.size() != static_cast<std::size_t>(p) * r)
      throw IoError("sample count mismatch in " + path.string());
    seq.input.resize(1, static_cast<Index>(samples.size()));
    for (std::size_t t = 0; t < samples.size(); ++t)
      seq.input(0, static_cast<Index>(t)) = samples[t];
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

}  // namespace isolab
