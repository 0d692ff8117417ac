#include "chessrl/critic/oracle.hpp"

#include <fstream>

#include <json.hpp>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::critic {
OracleCritic::OracleCritic(const std::map<std::string, std::string>& answers) {
  for (const auto& [fen, san] : answers) {
    const auto pos = chess::parse_fen(fen);
    answers_[chess::to_fen(pos)] = chess::parse_san(pos, san);
  }
}

OracleCritic OracleCritic::from_samples(const std::vector<puzzle::PositionSample>& samples) {
  OracleCritic out({});
  // Two puzzles can reach the same position with different answers; the
  // first sample wins so the critic stays a function of the position.
  for (const auto& s : samples) out.answers_.try_emplace(chess::to_fen(s.state), s.optimal_move);
  return out;
}

CriticScore OracleCritic::score(const chess::Position& pos, const chess::Move& mv) const {
  require_legal(pos, mv);
  const auto it = answers_.find(chess::to_fen(pos));
  if (it == answers_.end()) throw UnknownPosition("no oracle answer for " + chess::to_fen(pos));
  return {it->second == mv ? 1.0 : 0.0, id(), 0};
}

TableCritic::TableCritic(const Table& table, std::string id) : id_(std::move(id)) {
  for (const auto& [fen, values] : table) {
    const auto pos = chess::parse_fen(fen);
    auto& row = table_[chess::to_fen(pos)];
    for (const auto& [uci, v] : values) {
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("table value for " + uci + " in " + fen + " is outside [0, 1]");
      row[chess::parse_uci_move(pos, uci)] = v;
    }
  }
}

TableCritic TableCritic::load(const std::filesystem::path& path, std::string id) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Table table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      auto& row = table[rec.at("fen").get<std::string>()];
      for (const auto& [uci, v] : rec.at("values").items()) row[uci] = v.get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return TableCritic(table, std::move(id));
}

void TableCritic::write(const Table& table, std::ostream& out) {
  for (const auto& [fen, values] : table) {
    nlohmann::ordered_json rec;
    rec["fen"] = fen;
    rec["values"] = nlohmann::ordered_json::object();
    for (const auto& [uci, v] : values) rec["values"][uci] = v;
    out << rec.dump() << '\n';
  }
}

CriticScore TableCritic::score(const chess::Position& pos, const chess::Move& mv) const {
  require_legal(pos, mv);
  const auto it = table_.find(chess::to_fen(pos));
  if (it == table_.end()) throw UnknownPosition("no table entry for " + chess::to_fen(pos));
  const auto jt = it->second.find(mv);
  if (jt == it->second.end())
    throw UnknownPosition("no table value for " + chess::uci_of(mv) + " in " + chess::to_fen(pos));
  return {jt->second, id_, 0};
}

}  // namespace chessrl::critic
