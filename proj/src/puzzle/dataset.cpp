#include "chessrl/puzzle/dataset.hpp"

#include <fstream>
#include <map>

#include "chessrl/errors.hpp"

namespace chessrl::puzzle {

namespace {

int bucket_low(int rating, int width) {
  const int b = rating >= 0 ? rating / width : -((-rating + width - 1) / width);
  return b * width;
}

}  // namespace

nlohmann::ordered_json DatasetManifest::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["mode"] = to_string(mode);
  j["puzzles"] = puzzles;
  j["samples"] = samples;
  j["bucket_width"] = bucket_width;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& b : buckets) {
    nlohmann::ordered_json e;
    e["low"] = b.low;
    e["high"] = b.high;
    e["puzzles"] = b.puzzles;
    e["samples"] = b.samples;
    arr.push_back(std::move(e));
  }
  j["buckets"] = std::move(arr);
  return j;
}

std::vector<PositionSample> assemble_dataset(const std::vector<Puzzle>& puzzles, const BuildOptions& options,
                                             DatasetManifest* manifest) {
  if (options.bucket_width <= 0) throw ConfigError("bucket width must be positive");
  std::vector<PositionSample> samples = decompose_all(puzzles, options.mode, options.exec);

  if (manifest) {
    std::map<int, RatingBucket> buckets;
    for (const auto& p : puzzles) {
      const int low = bucket_low(p.rating, options.bucket_width);
      auto& b = buckets[low];
      b.low = low;
      b.high = low + options.bucket_width;
      ++b.puzzles;
    }
    for (const auto& s : samples) ++buckets[bucket_low(s.rating, options.bucket_width)].samples;
    manifest->seed = options.seed;
    manifest->mode = options.mode;
    manifest->puzzles = puzzles.size();
    manifest->samples = samples.size();
    manifest->bucket_width = options.bucket_width;
    manifest->buckets.clear();
    for (auto& [low, b] : buckets) manifest->buckets.push_back(b);
  }

  seeded_shuffle(samples, options.seed);
  return samples;
}

void write_samples(const std::filesystem::path& path, const std::vector<PositionSample>& samples,
                   bool include_legal_san) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : samples) out << to_record(s, include_legal_san).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

DatasetManifest build_dataset(const std::vector<Puzzle>& puzzles, const BuildOptions& options,
                              const std::filesystem::path& samples_out, const std::filesystem::path& manifest_out) {
  DatasetManifest manifest;
  const auto samples = assemble_dataset(puzzles, options, &manifest);
  write_samples(samples_out, samples, options.include_legal_san);
  std::ofstream out(manifest_out, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + manifest_out.string());
  out << manifest.to_json().dump(2) << '\n';
  if (!out) throw IoError("write failed for " + manifest_out.string());
  return manifest;
}

std::vector<PositionSample> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<PositionSample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    try {
      out.push_back(from_record(j));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace chessrl::puzzle
