#pragma once

#include <iosfwd>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "chessrl/critic/critic.hpp"
#include "chessrl/puzzle/sample.hpp"

namespace chessrl::critic {

/// 1.0 for the recorded answer, 0.0 for every other legal move. Positions
/// are keyed by their normalized FEN.
class OracleCritic final : public Backend {
 public:
  /// `answers` maps FEN to SAN. Throws MalformedFen, or UnknownSan /
  /// AmbiguousSan when an answer does not name a legal move.
  explicit OracleCritic(const std::map<std::string, std::string>& answers);

  static OracleCritic from_samples(const std::vector<puzzle::PositionSample>& samples);

  std::string id() const override { return "oracle"; }
  std::size_t size() const { return answers_.size(); }

  /// Throws UnknownPosition for FENs without an answer.
  CriticScore score(const chess::Position& pos, const chess::Move& mv) const override;

 private:
  std::unordered_map<std::string, chess::Move> answers_;
};

/// Graded lookup table: FEN -> {uci -> value}. Every legal move of a listed
/// position must have an entry.
class TableCritic final : public Backend {
 public:
  using Table = std::map<std::string, std::map<std::string, double>>;

  explicit TableCritic(const Table& table, std::string id = "table");

  /// Line-delimited records {"fen": ..., "values": {"e2e4": 0.7, ...}}.
  static TableCritic load(const std::filesystem::path& path, std::string id = "table");
  static void write(const Table& table, std::ostream& out);

  std::string id() const override { return id_; }
  std::size_t size() const { return table_.size(); }

  /// Throws UnknownPosition when the FEN or the move is missing.
  CriticScore score(const chess::Position& pos, const chess::Move& mv) const override;

 private:
  std::unordered_map<std::string, std::map<chess::Move, double>> table_;
  std::string id_;
};

}  // namespace chessrl::critic
