#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "chessrl/puzzle/sample.hpp"

namespace chessrl::prompt {

enum class MoveNotation { San, Uci };
enum class BoardRepr { Fen, Pgn, FenPgn };

/// Prompt ablation axes: move notation, board representation, and whether
/// the legal move list is spelled out.
struct PromptConfig {
  MoveNotation notation = MoveNotation::San;
  BoardRepr board = BoardRepr::Fen;
  bool include_legal_moves = true;
  std::string template_id = "default";

  friend bool operator==(const PromptConfig&, const PromptConfig&) = default;
};

/// Compact identifier such as "fen-san-legal" or "fenpgn-uci-nolegal".
std::string config_id(const PromptConfig& cfg);
/// Inverse of config_id; "default" maps to PromptConfig{}. Throws ConfigError.
PromptConfig parse_config_id(const std::string& id);

/// Plain-text template with {{name}} placeholders.
class PromptTemplate {
 public:
  static const PromptTemplate& builtin();
  static PromptTemplate from_text(std::string text);
  /// Throws IoError.
  static PromptTemplate load(const std::filesystem::path& path);

  /// Substitutes every placeholder. Throws ConfigError on an unknown or
  /// unterminated placeholder.
  std::string render(const std::map<std::string, std::string>& values) const;

  const std::string& text() const { return text_; }

 private:
  explicit PromptTemplate(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

/// Renders the sample with the builtin template. Byte-deterministic.
/// Throws ConfigError when a PGN board is requested and the sample carries
/// no move history, or when template_id is not "default".
std::string render_prompt(const puzzle::PositionSample& sample, const PromptConfig& cfg);
std::string render_prompt(const puzzle::PositionSample& sample, const PromptConfig& cfg, const PromptTemplate& tmpl);

/// The "User: ..." line on its own.
std::string render_query(const puzzle::PositionSample& sample, const PromptConfig& cfg);

/// Prompt for a bare position without trajectory (FEN boards only).
std::string render_prompt(const chess::Position& pos, const PromptConfig& cfg);

}  // namespace chessrl::prompt
