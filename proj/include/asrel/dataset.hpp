#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "asrel/core.hpp"

namespace asrel {

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };
std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view text);

enum class Provenance : std::uint8_t { kVote, kCommunity, kOrgMap, kIxpList, kSynthetic };
std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view text);

/// A labeled link. P2C entries are stored provider first; every other label is
/// stored with the smaller ASN first.
struct LabeledEdge {
  Asn a = 0;
  Asn b = 0;
  RelLabel label = RelLabel::kP2P;
  Split split = Split::kTrain;
  Provenance provenance = Provenance::kVote;

  friend bool operator==(const LabeledEdge&, const LabeledEdge&) = default;
};

/// Builds an entry in canonical orientation. For P2C, `a` is the provider.
LabeledEdge make_labeled_edge(Asn a, Asn b, RelLabel label, Provenance provenance);

struct LabeledEdgeSet {
  std::vector<LabeledEdge> entries;

  std::size_t size() const { return entries.size(); }
  std::array<std::size_t, kRelLabelCount> label_counts() const;
  std::size_t count(RelLabel label, Split split) const;
  /// Throws std::invalid_argument if an unordered pair appears twice.
  void check_unique() const;

  friend bool operator==(const LabeledEdgeSet&, const LabeledEdgeSet&) = default;
};

/// Relationship codes as published by AS-relationship inference tools.
inline constexpr int kCodePeer = 0;
inline constexpr int kCodeProviderCustomer = -1;

struct SourceEntry {
  Asn a = 0;
  Asn b = 0;
  int code = kCodePeer;  // -1: a is the provider of b; 0: peers
};

struct LabelSource {
  std::string name;
  std::vector<SourceEntry> entries;
};

/// `a|b|code[|...]` per line, `#` comments skipped. Extra fields are ignored.
LabelSource load_label_source(const std::filesystem::path& path);
void write_label_source(std::ostream& out, const LabelSource& source);

struct VoteReport {
  std::vector<std::size_t> source_sizes;
  std::size_t union_pairs = 0;
  std::size_t intersection = 0;
  double coincidence_rate = 0;  // intersection / union_pairs

  std::string to_json() const;
};

struct VoteResult {
  LabeledEdgeSet set;
  VoteReport report;
};

/// Hard vote: keeps exactly the unordered pairs that every source labels
/// identically, including P2C orientation. Throws std::invalid_argument for
/// fewer than two sources or a source that labels the same pair twice with
/// different relationships.
VoteResult vote_intersection(std::span<const LabelSource> sources);

struct SourceAgreement {
  std::size_t compared = 0;
  std::size_t matched = 0;
  double accuracy = 0;
};

/// Fraction of `set` entries covered by `reference` that carry the same label
/// and orientation there.
SourceAgreement agreement_with(const LabeledEdgeSet& set, const LabelSource& reference);

using OrgMap = std::unordered_map<Asn, std::string>;
using IxpSet = std::unordered_set<Asn>;

/// CSV `asn,org_id`; optional header row.
OrgMap load_org_map(const std::filesystem::path& path);
IxpSet load_ixp_list(const std::filesystem::path& path);

/// Relabels same-organization links as S2S. X2X entries are left alone, so
/// the result does not depend on the order of apply_* calls.
LabeledEdgeSet apply_sibling_labels(LabeledEdgeSet set, const OrgMap& orgs);

/// Relabels every link with an IXP endpoint as X2X.
LabeledEdgeSet apply_ixp_labels(LabeledEdgeSet set, const IxpSet& ixps);

/// Binary mode drops S2S/X2X entries. Multi mode downsamples every class to
/// the smallest class size (throws if any class is empty). Each class is then
/// split 6:2:2 into train/val/test. Deterministic for a given seed.
LabeledEdgeSet balance_and_split(const LabeledEdgeSet& set, std::uint64_t seed, Mode mode);

void write_dataset_csv(std::ostream& out, const LabeledEdgeSet& set);
LabeledEdgeSet read_dataset_csv(const std::filesystem::path& path);

}  // namespace asrel
