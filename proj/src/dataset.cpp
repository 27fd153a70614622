#include "asrel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

#include "asrel/io.hpp"

namespace asrel {

namespace {

constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};
constexpr std::array<std::string_view, 5> kProvenanceNames = {"vote", "community", "org_map",
                                                              "ixp_list", "synthetic"};

std::uint64_t pair_key(Asn a, Asn b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

/// Label plus the provider ASN for P2C (0 otherwise).
struct Verdict {
  RelLabel label;
  Asn provider;
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

Verdict verdict_of(const SourceEntry& e) {
  if (e.code == kCodeProviderCustomer) return {RelLabel::kP2C, e.a};
  return {RelLabel::kP2P, 0};
}

Verdict verdict_of(const LabeledEdge& e) {
  return {e.label, e.label == RelLabel::kP2C ? e.a : 0};
}

std::map<std::uint64_t, Verdict> index_source(const LabelSource& source) {
  std::map<std::uint64_t, Verdict> out;
  for (const auto& e : source.entries) {
    const auto v = verdict_of(e);
    const auto [it, inserted] = out.emplace(pair_key(e.a, e.b), v);
    if (!inserted && !(it->second == v)) {
      throw std::invalid_argument("label source '" + source.name + "' has conflicting entries for (" +
                                  std::to_string(e.a) + ", " + std::to_string(e.b) + ")");
    }
  }
  return out;
}

void sort_entries(std::vector<LabeledEdge>& entries) {
  std::sort(entries.begin(), entries.end(), [](const LabeledEdge& x, const LabeledEdge& y) {
    return std::make_tuple(std::min(x.a, x.b), std::max(x.a, x.b)) <
           std::make_tuple(std::min(y.a, y.b), std::max(y.a, y.b));
  });
}

}  // namespace

std::string_view to_string(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }

std::optional<Split> parse_split(std::string_view text) {
  for (std::size_t i = 0; i < kSplitNames.size(); ++i) {
    if (kSplitNames[i] == text) return static_cast<Split>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Provenance p) { return kProvenanceNames[static_cast<std::size_t>(p)]; }

std::optional<Provenance> parse_provenance(std::string_view text) {
  for (std::size_t i = 0; i < kProvenanceNames.size(); ++i) {
    if (kProvenanceNames[i] == text) return static_cast<Provenance>(i);
  }
  return std::nullopt;
}

LabeledEdge make_labeled_edge(Asn a, Asn b, RelLabel label, Provenance provenance) {
  if (a == b) throw std::invalid_argument("self link " + std::to_string(a));
  LabeledEdge e{a, b, label, Split::kTrain, provenance};
  if (label != RelLabel::kP2C && e.a > e.b) std::swap(e.a, e.b);
  return e;
}

std::array<std::size_t, kRelLabelCount> LabeledEdgeSet::label_counts() const {
  std::array<std::size_t, kRelLabelCount> out{};
  for (const auto& e : entries) ++out[class_index(e.label)];
  return out;
}

std::size_t LabeledEdgeSet::count(RelLabel label, Split split) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const auto& e) {
    return e.label == label && e.split == split;
  }));
}

void LabeledEdgeSet::check_unique() const {
  std::unordered_set<std::uint64_t> seen;
  for (const auto& e : entries) {
    if (!seen.insert(pair_key(e.a, e.b)).second) {
      throw std::invalid_argument("duplicate link (" + std::to_string(e.a) + ", " +
                                  std::to_string(e.b) + ")");
    }
  }
}

LabelSource load_label_source(const std::filesystem::path& path) {
  LabelSource source;
  source.name = path.filename().string();
  io::for_each_data_line(path, [&](std::size_t line, std::string_view body) {
    const auto fields = io::split(body, '|');
    if (fields.size() < 3) throw ParseError("expected 'a|b|code' in " + path.string(), line);
    const auto a = io::parse_asn(fields[0]);
    const auto b = io::parse_asn(fields[1]);
    const auto code = io::parse_int(fields[2]);
    if (!a || !b || !code || *a == *b) {
      throw ParseError("malformed relationship '" + std::string(body) + "' in " + path.string(),
                       line);
    }
    if (*code != kCodePeer && *code != kCodeProviderCustomer) {
      throw ParseError("unsupported relationship code " + std::to_string(*code) + " in " +
                           path.string(),
                       line);
    }
    source.entries.push_back({*a, *b, static_cast<int>(*code)});
  });
  return source;
}

void write_label_source(std::ostream& out, const LabelSource& source) {
  for (const auto& e : source.entries) out << e.a << '|' << e.b << '|' << e.code << '\n';
}

std::string VoteReport::to_json() const {
  nlohmann::ordered_json j;
  j["source_sizes"] = source_sizes;
  j["union_pairs"] = union_pairs;
  j["intersection"] = intersection;
  j["coincidence_rate"] = coincidence_rate;
  return j.dump(2);
}

VoteResult vote_intersection(std::span<const LabelSource> sources) {
  if (sources.size() < 2) throw std::invalid_argument("vote_intersection needs at least two sources");
  std::vector<std::map<std::uint64_t, Verdict>> indexed;
  indexed.reserve(sources.size());
  VoteResult result;
  std::unordered_set<std::uint64_t> all_pairs;
  for (const auto& s : sources) {
    indexed.push_back(index_source(s));
    result.report.source_sizes.push_back(indexed.back().size());
    for (const auto& [key, verdict] : indexed.back()) all_pairs.insert(key);
  }
  result.report.union_pairs = all_pairs.size();

  for (const auto& [key, verdict] : indexed.front()) {
    bool unanimous = true;
    for (std::size_t s = 1; s < indexed.size() && unanimous; ++s) {
      const auto it = indexed[s].find(key);
      unanimous = it != indexed[s].end() && it->second == verdict;
    }
    if (!unanimous) continue;
    const Asn lo = static_cast<Asn>(key >> 32);
    const Asn hi = static_cast<Asn>(key & 0xFFFFFFFFu);
    if (verdict.label == RelLabel::kP2C) {
      const Asn customer = verdict.provider == lo ? hi : lo;
      result.set.entries.push_back(
          make_labeled_edge(verdict.provider, customer, RelLabel::kP2C, Provenance::kVote));
    } else {
      result.set.entries.push_back(make_labeled_edge(lo, hi, RelLabel::kP2P, Provenance::kVote));
    }
  }
  result.report.intersection = result.set.size();
  result.report.coincidence_rate =
      all_pairs.empty() ? 0.0
                        : static_cast<double>(result.report.intersection) /
                              static_cast<double>(result.report.union_pairs);
  return result;
}

SourceAgreement agreement_with(const LabeledEdgeSet& set, const LabelSource& reference) {
  const auto ref = index_source(reference);
  SourceAgreement out;
  for (const auto& e : set.entries) {
    const auto it = ref.find(pair_key(e.a, e.b));
    if (it == ref.end()) continue;
    ++out.compared;
    if (it->second == verdict_of(e)) ++out.matched;
  }
  out.accuracy = out.compared ? static_cast<double>(out.matched) / static_cast<double>(out.compared) : 0.0;
  return out;
}

OrgMap load_org_map(const std::filesystem::path& path) {
  OrgMap orgs;
  bool first = true;
  io::for_each_data_line(path, [&](std::size_t line, std::string_view body) {
    const auto fields = io::split(body, ',');
    const bool header = first && !io::parse_asn(fields[0]);
    first = false;
    if (header) return;
    const auto asn = io::parse_asn(fields[0]);
    if (!asn || fields.size() < 2 || io::trim(fields[1]).empty()) {
      throw ParseError("expected 'asn,org_id' in " + path.string(), line);
    }
    orgs[*asn] = std::string(io::trim(fields[1]));
  });
  return orgs;
}

IxpSet load_ixp_list(const std::filesystem::path& path) {
  const auto list = io::read_asn_list(path);
  return IxpSet(list.begin(), list.end());
}

LabeledEdgeSet apply_sibling_labels(LabeledEdgeSet set, const OrgMap& orgs) {
  for (auto& e : set.entries) {
    if (e.label == RelLabel::kX2X) continue;
    const auto oa = orgs.find(e.a);
    const auto ob = orgs.find(e.b);
    if (oa == orgs.end() || ob == orgs.end() || oa->second != ob->second) continue;
    const auto split = e.split;
    e = make_labeled_edge(e.a, e.b, RelLabel::kS2S, Provenance::kOrgMap);
    e.split = split;
  }
  return set;
}

LabeledEdgeSet apply_ixp_labels(LabeledEdgeSet set, const IxpSet& ixps) {
  for (auto& e : set.entries) {
    if (!ixps.contains(e.a) && !ixps.contains(e.b)) continue;
    const auto split = e.split;
    e = make_labeled_edge(e.a, e.b, RelLabel::kX2X, Provenance::kIxpList);
    e.split = split;
  }
  return set;
}

LabeledEdgeSet balance_and_split(const LabeledEdgeSet& set, std::uint64_t seed, Mode mode) {
  set.check_unique();
  std::array<std::vector<LabeledEdge>, kRelLabelCount> by_class;
  for (const auto& e : set.entries) {
    if (mode == Mode::kBinary && (e.label == RelLabel::kS2S || e.label == RelLabel::kX2X)) continue;
    by_class[class_index(e.label)].push_back(e);
  }
  const int classes = class_count(mode);
  std::size_t target = 0;
  if (mode == Mode::kMulti) {
    target = by_class[0].size();
    for (int c = 0; c < classes; ++c) {
      if (by_class[c].empty()) {
        throw std::invalid_argument("class " + std::string(to_string(label_from_class(c))) +
                                    " is empty; multi-class mode needs all four classes");
      }
      target = std::min(target, by_class[c].size());
    }
  }

  std::mt19937_64 rng(seed);
  LabeledEdgeSet out;
  for (int c = 0; c < classes; ++c) {
    auto& members = by_class[c];
    sort_entries(members);
    std::shuffle(members.begin(), members.end(), rng);
    if (mode == Mode::kMulti) members.resize(target);
    const std::size_t n = members.size();
    const auto n_val = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t i = 0; i < n; ++i) {
      members[i].split = i < n_train ? Split::kTrain : (i < n_train + n_val ? Split::kVal : Split::kTest);
      out.entries.push_back(members[i]);
    }
  }
  sort_entries(out.entries);
  return out;
}

void write_dataset_csv(std::ostream& out, const LabeledEdgeSet& set) {
  out << "a,b,label,split,provenance\n";
  for (const auto& e : set.entries) {
    out << e.a << ',' << e.b << ',' << to_string(e.label) << ',' << to_string(e.split) << ','
        << to_string(e.provenance) << '\n';
  }
}

LabeledEdgeSet read_dataset_csv(const std::filesystem::path& path) {
  LabeledEdgeSet set;
  bool first = true;
  io::for_each_data_line(path, [&](std::size_t line, std::string_view body) {
    const auto fields = io::split(body, ',');
    const bool header = first && !io::parse_asn(fields[0]);
    first = false;
    if (header) return;
    if (fields.size() != 5) throw ParseError("expected 5 fields in " + path.string(), line);
    const auto a = io::parse_asn(fields[0]);
    const auto b = io::parse_asn(fields[1]);
    const auto label = parse_rel_label(io::trim(fields[2]));
    const auto split = parse_split(io::trim(fields[3]));
    const auto provenance = parse_provenance(io::trim(fields[4]));
    if (!a || !b || !label || !split || !provenance || *a == *b) {
      throw ParseError("malformed dataset row '" + std::string(body) + "' in " + path.string(), line);
    }
    set.entries.push_back({*a, *b, *label, *split, *provenance});
  });
  set.check_unique();
  return set;
}

}  // namespace asrel
