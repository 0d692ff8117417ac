#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "chessrl/chess/position.hpp"

namespace chessrl::testing {

inline constexpr const char* kD2Fen = "r4r1k/8/bp3nQp/p2P4/3P1q1P/P1N2N2/1P3P2/1K4R1 w - - 1 26";
inline constexpr const char* kD4Fen = "6k1/1r3p2/4p1p1/3pQ2p/3r3P/8/5PP1/6K1 w - - 2 35";
inline constexpr const char* kD5Fen = "8/5k2/3p1q2/pp1PbQ2/1r2p3/8/PPP4n/1K3BR1 w - - 16 42";

std::filesystem::path data_path(const std::string& name);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Colour-flipped position: ranks reversed, colours and side to move swapped.
chess::Position mirrored(const chess::Position& pos);
chess::Move mirrored(const chess::Move& mv);

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace chessrl::testing
