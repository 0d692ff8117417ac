#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "chessrl/puzzle/sample.hpp"

namespace chessrl::puzzle {

struct RatingBucket {
  int low = 0;   // inclusive
  int high = 0;  // exclusive
  std::size_t puzzles = 0;
  std::size_t samples = 0;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  DecomposeMode mode = DecomposeMode::AllMoves;
  std::size_t puzzles = 0;
  std::size_t samples = 0;
  int bucket_width = 200;
  std::vector<RatingBucket> buckets;

  nlohmann::ordered_json to_json() const;
};

struct BuildOptions {
  DecomposeMode mode = DecomposeMode::AllMoves;
  std::uint64_t seed = 0;
  int bucket_width = 200;
  bool include_legal_san = false;
  parallel::Exec exec = parallel::Exec::Parallel;
};

/// Decomposes, shuffles with a seeded Fisher-Yates, and returns the samples.
std::vector<PositionSample> assemble_dataset(const std::vector<Puzzle>& puzzles, const BuildOptions& options,
                                             DatasetManifest* manifest = nullptr);

/// assemble_dataset + persistence. Same inputs and seed give byte-identical
/// files. Throws IoError.
DatasetManifest build_dataset(const std::vector<Puzzle>& puzzles, const BuildOptions& options,
                              const std::filesystem::path& samples_out, const std::filesystem::path& manifest_out);

void write_samples(const std::filesystem::path& path, const std::vector<PositionSample>& samples,
                   bool include_legal_san = false);

/// Reads line-delimited sample records, re-validating each one.
/// Throws IoError or ValidationError (with the 1-based line number).
std::vector<PositionSample> read_samples(const std::filesystem::path& path);

/// In-place seeded Fisher-Yates shuffle shared by dataset assembly and the
/// trainer so orders are reproducible across platforms.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace chessrl::puzzle
