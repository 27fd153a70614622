#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace asrel {

/// Autonomous system number. Valid values are 1 .. 2^32-1; zero is reserved.
using Asn = std::uint32_t;

/// Dense node index inside an AsGraph (ascending-ASN order).
using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Business relationship between two ASes. The enumerator value doubles as the
/// class index used by the classifier (binary mode uses only P2P and P2C).
enum class RelLabel : std::uint8_t { kP2P = 0, kP2C = 1, kS2S = 2, kX2X = 3 };

inline constexpr int kRelLabelCount = 4;

std::string_view to_string(RelLabel label);
std::optional<RelLabel> parse_rel_label(std::string_view text);

inline int class_index(RelLabel label) { return static_cast<int>(label); }
RelLabel label_from_class(int index);

/// Binary mode classifies P2P vs P2C; multi mode adds S2S and X2X.
enum class Mode : std::uint8_t { kBinary, kMulti };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);
inline int class_count(Mode mode) { return mode == Mode::kBinary ? 2 : 4; }

/// Malformed input text. Carries the 1-based line number when known (0 otherwise).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0);
  /// Prefixes `context` (e.g. a file name) while keeping the line number.
  ParseError(const std::string& context, const ParseError& inner);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace asrel
