#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asrel/core.hpp"

namespace asrel {

/// One observed BGP route. hops[0] is the vantage point.
struct AsPath {
  std::vector<Asn> hops;
  std::size_t source_line = 0;

  Asn vantage_point() const { return hops.front(); }
  friend bool operator==(const AsPath& a, const AsPath& b) { return a.hops == b.hops; }
};

/// Registry of allocated ASN ranges. Ranges are stored merged and sorted, so
/// membership is a binary search.
class AllocationTable {
 public:
  struct Range {
    Asn first;
    Asn last;
  };

  AllocationTable() = default;
  explicit AllocationTable(std::vector<Range> ranges);

  /// One ASN or `start-end` per line; `#` comments allowed. Throws ParseError
  /// on malformed lines and when the file has no entries.
  static AllocationTable load(const std::filesystem::path& path);
  static AllocationTable parse(std::istream& in);

  bool contains(Asn asn) const;
  bool empty() const { return ranges_.empty(); }
  std::span<const Range> ranges() const { return ranges_; }

 private:
  std::vector<Range> ranges_;
};

/// Parses `ASN(|ASN)*`. Does not sanitize. Throws ParseError carrying
/// `line_number` for empty input or a non-integer token.
AsPath parse_path_line(std::string_view line, std::size_t line_number = 0);

std::string format_path(const AsPath& path);

enum class RejectReason { kUnallocated, kLoop };
std::string_view to_string(RejectReason reason);

struct SanitizeResult {
  AsPath path;  // compressed path; meaningful only when accepted
  bool compressed = false;
  std::optional<RejectReason> rejection;

  bool accepted() const { return !rejection.has_value(); }
};

/// Compresses runs of the same ASN, then rejects paths that contain an
/// unallocated ASN (only when `table` is given) or a non-adjacent repeat.
SanitizeResult sanitize(const AsPath& path, const AllocationTable* table);

struct IngestReport {
  std::size_t parsed = 0;
  std::size_t compressed = 0;
  std::size_t rejected_loop = 0;
  std::size_t rejected_unallocated = 0;

  std::size_t accepted() const { return parsed - rejected_loop - rejected_unallocated; }
  IngestReport& operator+=(const IngestReport& other);
  friend bool operator==(const IngestReport&, const IngestReport&) = default;

  std::string to_json() const;
  std::string to_text() const;
};

struct IngestResult {
  std::vector<AsPath> paths;
  IngestReport report;
};

/// Reads a paths file (blank and `#` lines skipped), sanitizing each line.
/// Output preserves file order.
IngestResult ingest_stream(std::istream& in, const AllocationTable* table);
IngestResult ingest_file(const std::filesystem::path& path, const AllocationTable* table);

void write_paths(std::ostream& out, std::span<const AsPath> paths);

}  // namespace asrel
