#include "asrel/path_ingest.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "json.hpp"

#include "asrel/io.hpp"

namespace asrel {

AllocationTable::AllocationTable(std::vector<Range> ranges) {
  std::sort(ranges.begin(), ranges.end(),
            [](const Range& a, const Range& b) { return a.first < b.first; });
  for (const auto& r : ranges) {
    if (!ranges_.empty() && static_cast<std::uint64_t>(ranges_.back().last) + 1 >= r.first) {
      ranges_.back().last = std::max(ranges_.back().last, r.last);
    } else {
      ranges_.push_back(r);
    }
  }
}

AllocationTable AllocationTable::parse(std::istream& in) {
  std::vector<Range> ranges;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto body = io::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto dash = body.find('-');
    if (dash == std::string_view::npos) {
      const auto asn = io::parse_asn(body);
      if (!asn) throw ParseError("invalid ASN '" + std::string(body) + "'", number);
      ranges.push_back({*asn, *asn});
      continue;
    }
    const auto first = io::parse_asn(body.substr(0, dash));
    const auto last = io::parse_asn(body.substr(dash + 1));
    if (!first || !last || *first > *last) {
      throw ParseError("invalid range '" + std::string(body) + "'", number);
    }
    ranges.push_back({*first, *last});
  }
  if (ranges.empty()) throw ParseError("allocation table has no entries");
  return AllocationTable(std::move(ranges));
}

AllocationTable AllocationTable::load(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e);
  }
}

bool AllocationTable::contains(Asn asn) const {
  auto it = std::upper_bound(ranges_.begin(), ranges_.end(), asn,
                             [](Asn value, const Range& r) { return value < r.first; });
  if (it == ranges_.begin()) return false;
  --it;
  return asn <= it->last;
}

AsPath parse_path_line(std::string_view line, std::size_t line_number) {
  const auto body = io::trim(line);
  if (body.empty()) throw ParseError("empty path line", line_number);
  AsPath path;
  path.source_line = line_number;
  for (const auto token : io::split(body, '|')) {
    const auto asn = io::parse_asn(token);
    if (!asn) throw ParseError("malformed ASN token '" + std::string(token) + "'", line_number);
    path.hops.push_back(*asn);
  }
  return path;
}

std::string format_path(const AsPath& path) {
  std::string out;
  for (std::size_t i = 0; i < path.hops.size(); ++i) {
    if (i) out.push_back('|');
    out += std::to_string(path.hops[i]);
  }
  return out;
}

std::string_view to_string(RejectReason reason) {
  return reason == RejectReason::kLoop ? "loop" : "unallocated";
}

SanitizeResult sanitize(const AsPath& path, const AllocationTable* table) {
  SanitizeResult result;
  result.path.source_line = path.source_line;
  auto& hops = result.path.hops;
  hops.reserve(path.hops.size());
  for (const Asn asn : path.hops) {
    if (!hops.empty() && hops.back() == asn) {
      result.compressed = true;
      continue;
    }
    hops.push_back(asn);
  }

  if (table) {
    const bool all_allocated =
        std::all_of(hops.begin(), hops.end(), [&](Asn a) { return table->contains(a); });
    if (!all_allocated) {
      result.rejection = RejectReason::kUnallocated;
      return result;
    }
  }

  // After compression any repeat is non-adjacent.
  std::unordered_set<Asn> seen;
  seen.reserve(hops.size() * 2);
  for (const Asn asn : hops) {
    if (!seen.insert(asn).second) {
      result.rejection = RejectReason::kLoop;
      break;
    }
  }
  return result;
}

IngestReport& IngestReport::operator+=(const IngestReport& other) {
  parsed += other.parsed;
  compressed += other.compressed;
  rejected_loop += other.rejected_loop;
  rejected_unallocated += other.rejected_unallocated;
  return *this;
}

std::string IngestReport::to_json() const {
  nlohmann::ordered_json j;
  j["parsed"] = parsed;
  j["compressed"] = compressed;
  j["rejected_loop"] = rejected_loop;
  j["rejected_unallocated"] = rejected_unallocated;
  j["accepted"] = accepted();
  return j.dump(2);
}

std::string IngestReport::to_text() const {
  return "parsed " + std::to_string(parsed) + "\ncompressed " + std::to_string(compressed) +
         "\nrejected_loop " + std::to_string(rejected_loop) + "\nrejected_unallocated " +
         std::to_string(rejected_unallocated) + "\naccepted " + std::to_string(accepted()) + "\n";
}

IngestResult ingest_stream(std::istream& in, const AllocationTable* table) {
  IngestResult result;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto body = io::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto parsed = parse_path_line(body, number);
    ++result.report.parsed;
    auto clean = sanitize(parsed, table);
    if (clean.compressed) ++result.report.compressed;
    if (!clean.accepted()) {
      if (*clean.rejection == RejectReason::kLoop) {
        ++result.report.rejected_loop;
      } else {
        ++result.report.rejected_unallocated;
      }
      continue;
    }
    result.paths.push_back(std::move(clean.path));
  }
  return result;
}

IngestResult ingest_file(const std::filesystem::path& path, const AllocationTable* table) {
  auto in = io::open_input(path);
  try {
    return ingest_stream(in, table);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e);
  }
}

void write_paths(std::ostream& out, std::span<const AsPath> paths) {
  for (const auto& p : paths) out << format_path(p) << '\n';
}

}  // namespace asrel
