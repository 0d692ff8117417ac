#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "chessrl/chess/movegen.hpp"
#include "chessrl/prompt/prompt.hpp"

namespace chessrl::prompt {

struct ParsedOutput {
  std::string think_text;
  std::string answer_text;
  bool format_ok = false;
  bool english_ok = false;
};

struct ParseOptions {
  /// The builtin template ends with an opening <think>, so completions may
  /// start directly with the reasoning. When set, a missing opener is
  /// treated as present.
  bool think_opened_by_prompt = false;
};

/// Splits a completion into think/answer spans. format_ok holds iff exactly
/// one <think>...</think> block precedes exactly one <answer>...</answer>
/// block, with only whitespace before the first and after the last.
/// Trailing end-of-text markers are ignored.
ParsedOutput parse_output(std::string_view text, const ParseOptions& options = {});

/// English heuristic: at least 95% of codepoints are ASCII and none are CJK,
/// Cyrillic or Arabic. Empty text is not English.
bool looks_english(std::string_view utf8);

/// First-token salvage of answer_text: strips move numbers ("17...", "1.")
/// and surrounding punctuation, then resolves in the notation of `cfg`.
/// Never returns an illegal move.
std::optional<chess::Move> extract_move(const ParsedOutput& parsed, const chess::Position& pos,
                                        const PromptConfig& cfg);

/// Canonical completion for a chosen move, used by scripted agents.
std::string format_answer(std::string_view think, std::string_view answer);

}  // namespace chessrl::prompt
