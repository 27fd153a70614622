#include "asrel/core.hpp"

#include <array>

namespace asrel {

namespace {
constexpr std::array<std::string_view, kRelLabelCount> kLabelNames = {"p2p", "p2c", "s2s",
                                                                      "x2x"};
}  // namespace

std::string_view to_string(RelLabel label) { return kLabelNames[class_index(label)]; }

std::optional<RelLabel> parse_rel_label(std::string_view text) {
  for (int i = 0; i < kRelLabelCount; ++i) {
    if (kLabelNames[i] == text) return static_cast<RelLabel>(i);
  }
  return std::nullopt;
}

RelLabel label_from_class(int index) {
  if (index < 0 || index >= kRelLabelCount) {
    throw std::out_of_range("class index out of range: " + std::to_string(index));
  }
  return static_cast<RelLabel>(index);
}

std::string_view to_string(Mode mode) { return mode == Mode::kBinary ? "binary" : "multi"; }

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "binary") return Mode::kBinary;
  if (text == "multi") return Mode::kMulti;
  return std::nullopt;
}

ParseError::ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

ParseError::ParseError(const std::string& context, const ParseError& inner)
    : std::runtime_error(context + ": " + inner.what()), line_(inner.line_) {}

}  // namespace asrel
