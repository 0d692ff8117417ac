#include "support/fixtures.hpp"

#include <atomic>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "chessrl/chess/types.hpp"

namespace chessrl::testing {

std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(CHESSRL_TEST_DATA) / name; }

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

chess::Move mirrored(const chess::Move& mv) {
  auto flip = [](chess::Square sq) { return static_cast<chess::Square>(sq ^ 56); };
  return {flip(mv.from), flip(mv.to), mv.promotion};
}

chess::Position mirrored(const chess::Position& pos) {
  std::istringstream in(chess::to_fen(pos));
  std::string board, side, castling, ep, half, full;
  in >> board >> side >> castling >> ep >> half >> full;
  auto swap_case = [](std::string t) {
    for (char& c : t) c = std::isupper(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c))
                                                                      : static_cast<char>(std::toupper(c));
    return t;
  };
  std::vector<std::string> ranks;
  std::stringstream bs(board);
  for (std::string r; std::getline(bs, r, '/');) ranks.insert(ranks.begin(), swap_case(r));
  std::string flipped_board;
  for (std::size_t i = 0; i < ranks.size(); ++i) flipped_board += (i ? "/" : "") + ranks[i];
  std::string flipped_castling = "-";
  if (castling != "-") {
    flipped_castling.clear();
    const std::string swapped = swap_case(castling);
    for (char c : std::string("KQkq"))
      if (swapped.find(c) != std::string::npos) flipped_castling += c;
  }
  if (ep != "-") ep[1] = ep[1] == '3' ? '6' : '3';
  return chess::parse_fen(flipped_board + " " + (side == "w" ? "b" : "w") + " " + flipped_castling + " " + ep +
                          " " + half + " " + full);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("chessrl-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace chessrl::testing
