#include <fstream>
#include <sstream>

#include "asrel/dataset.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace asrel;

namespace {

LabelSource source(std::string name, std::vector<SourceEntry> entries) {
  return {std::move(name), std::move(entries)};
}

LabeledEdgeSet synthetic_set(const std::array<int, 4>& sizes) {
  LabeledEdgeSet set;
  Asn next = 1;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < sizes[static_cast<std::size_t>(c)]; ++i, next += 2) {
      set.entries.push_back(make_labeled_edge(next, next + 1, label_from_class(c), Provenance::kSynthetic));
    }
  }
  return set;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("canonical orientation") {
    const auto p2c = make_labeled_edge(9, 3, RelLabel::kP2C, Provenance::kVote);
    CHECK(p2c.a == 9);
    CHECK(p2c.b == 3);
    const auto p2p = make_labeled_edge(9, 3, RelLabel::kP2P, Provenance::kVote);
    CHECK(p2p.a == 3);
    CHECK(p2p.b == 9);
    CHECK_THROWS(make_labeled_edge(4, 4, RelLabel::kP2P, Provenance::kVote));
  }

  TEST_CASE("vote keeps only unanimous pairs") {
    const std::vector<LabelSource> sources{
        source("a", {{1, 2, 0}, {3, 4, -1}, {5, 6, -1}, {7, 8, 0}}),
        source("b", {{2, 1, 0}, {3, 4, -1}, {6, 5, -1}, {7, 8, -1}}),
    };
    const auto r = vote_intersection(sources);
    REQUIRE(r.set.size() == 2);
    CHECK(r.set.entries[0] == make_labeled_edge(1, 2, RelLabel::kP2P, Provenance::kVote));
    CHECK(r.set.entries[1] == make_labeled_edge(3, 4, RelLabel::kP2C, Provenance::kVote));
    CHECK(r.report.union_pairs == 4);
    CHECK(r.report.intersection == 2);
    CHECK(r.report.coincidence_rate == 0.5);
  }

  TEST_CASE("vote needs two sources and consistent sources") {
    const std::vector<LabelSource> one{source("a", {{1, 2, 0}})};
    CHECK_THROWS_AS(vote_intersection(one), std::invalid_argument);
    const std::vector<LabelSource> conflicting{source("a", {{1, 2, 0}, {2, 1, -1}}), source("b", {{1, 2, 0}})};
    CHECK_THROWS_AS(vote_intersection(conflicting), std::invalid_argument);
  }

  TEST_CASE("property: a source agrees with itself completely") {
    asrel::testing::Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      std::map<std::pair<Asn, Asn>, int> pairs;
      const int n = asrel::testing::uniform_int(rng, 1, 60);
      for (int i = 0; i < n; ++i) {
        const Asn a = static_cast<Asn>(asrel::testing::uniform_int(rng, 1, 30));
        const Asn b = static_cast<Asn>(asrel::testing::uniform_int(rng, 1, 30));
        if (a != b) pairs[{std::min(a, b), std::max(a, b)}] = asrel::testing::uniform_int(rng, 0, 1) ? 0 : -1;
      }
      LabelSource s{"s", {}};
      for (const auto& [p, code] : pairs) {
        const bool flip = asrel::testing::uniform_int(rng, 0, 1);
        s.entries.push_back({flip ? p.second : p.first, flip ? p.first : p.second, code});
      }
      const std::vector<LabelSource> twice{s, s};
      const auto r = vote_intersection(twice);
      CHECK(r.set.size() == s.entries.size());
      CHECK(r.report.coincidence_rate == (s.entries.empty() ? 0.0 : 1.0));
      for (const auto& e : s.entries) {
        const auto expected = make_labeled_edge(e.a, e.b, e.code == 0 ? RelLabel::kP2P : RelLabel::kP2C, Provenance::kVote);
        CHECK(std::find(r.set.entries.begin(), r.set.entries.end(), expected) != r.set.entries.end());
      }
    }
  }

  TEST_CASE("sibling and IXP relabeling with X2X precedence in either order") {
    LabeledEdgeSet set;
    set.entries = {make_labeled_edge(10, 11, RelLabel::kP2C, Provenance::kVote),
                   make_labeled_edge(10, 12, RelLabel::kP2P, Provenance::kVote),
                   make_labeled_edge(50, 10, RelLabel::kP2P, Provenance::kVote),
                   make_labeled_edge(50, 51, RelLabel::kP2P, Provenance::kVote)};
    const OrgMap orgs{{10, "O1"}, {11, "O1"}, {12, "O2"}, {50, "O3"}, {51, "O3"}};
    const IxpSet ixps{50};
    const auto ab = apply_ixp_labels(apply_sibling_labels(set, orgs), ixps);
    const auto ba = apply_sibling_labels(apply_ixp_labels(set, ixps), orgs);
    CHECK(ab == ba);
    CHECK(ab.entries[0].label == RelLabel::kS2S);
    CHECK(ab.entries[0].provenance == Provenance::kOrgMap);
    CHECK(ab.entries[1].label == RelLabel::kP2P);
    CHECK(ab.entries[2].label == RelLabel::kX2X);
    CHECK(ab.entries[3].label == RelLabel::kX2X);
    CHECK(ab.entries[3].provenance == Provenance::kIxpList);
  }

  TEST_CASE("multi mode downsamples to the smallest class") {
    const auto out = balance_and_split(synthetic_set({1000, 800, 50, 50}), 3, Mode::kMulti);
    const auto counts = out.label_counts();
    for (const auto c : counts) CHECK(c == 50);
    CHECK(out.count(RelLabel::kP2P, Split::kTrain) == 30);
    CHECK(out.count(RelLabel::kP2P, Split::kVal) == 10);
    CHECK(out.count(RelLabel::kP2P, Split::kTest) == 10);
  }

  TEST_CASE("a class of ten splits 6:2:2") {
    const auto out = balance_and_split(synthetic_set({10, 10, 10, 10}), 1, Mode::kMulti);
    for (int c = 0; c < 4; ++c) {
      CHECK(out.count(label_from_class(c), Split::kTrain) == 6);
      CHECK(out.count(label_from_class(c), Split::kVal) == 2);
      CHECK(out.count(label_from_class(c), Split::kTest) == 2);
    }
  }

  TEST_CASE("binary mode drops S2S and X2X; multi mode needs all four classes") {
    const auto bin = balance_and_split(synthetic_set({20, 30, 5, 5}), 1, Mode::kBinary);
    CHECK(bin.size() == 50);
    CHECK(bin.label_counts()[2] == 0);
    CHECK_THROWS_AS(balance_and_split(synthetic_set({20, 30, 0, 5}), 1, Mode::kMulti), std::invalid_argument);
  }

  TEST_CASE("property: splits are deterministic, disjoint and exhaustive") {
    asrel::testing::Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
      const std::array<int, 4> sizes{asrel::testing::uniform_int(rng, 1, 40), asrel::testing::uniform_int(rng, 1, 40),
                                     asrel::testing::uniform_int(rng, 1, 40), asrel::testing::uniform_int(rng, 1, 40)};
      const auto set = synthetic_set(sizes);
      const auto seed = static_cast<std::uint64_t>(trial);
      for (const Mode mode : {Mode::kBinary, Mode::kMulti}) {
        const auto a = balance_and_split(set, seed, mode);
        CHECK(a == balance_and_split(set, seed, mode));
        a.check_unique();
        const auto counts = a.label_counts();
        for (int c = 0; c < class_count(mode); ++c) {
          const auto n = counts[static_cast<std::size_t>(c)];
          const auto expected = mode == Mode::kMulti ? static_cast<std::size_t>(*std::min_element(sizes.begin(), sizes.end()))
                                                     : static_cast<std::size_t>(sizes[static_cast<std::size_t>(c)]);
          CHECK(n == expected);
          const auto held = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
          CHECK(a.count(label_from_class(c), Split::kVal) == held);
          CHECK(a.count(label_from_class(c), Split::kTest) == held);
          CHECK(a.count(label_from_class(c), Split::kTrain) == n - 2 * held);
        }
      }
    }
  }

  TEST_CASE("dataset CSV round-trips") {
    const auto set = balance_and_split(synthetic_set({5, 5, 5, 5}), 2, Mode::kMulti);
    const auto dir = asrel::testing::scratch_dir("dataset_csv");
    {
      std::ofstream out(dir / "d.csv");
      write_dataset_csv(out, set);
    }
    CHECK(read_dataset_csv(dir / "d.csv") == set);
  }

  TEST_CASE("label source files parse a|b|code and ignore extra fields") {
    const auto dir = asrel::testing::scratch_dir("label_source");
    std::ofstream(dir / "s.txt") << "# header\n1|2|-1|bgp\n3|4|0\n";
    const auto s = load_label_source(dir / "s.txt");
    REQUIRE(s.entries.size() == 2);
    CHECK(s.entries[0].code == -1);
    std::ofstream(dir / "bad.txt") << "1|2|1\n";
    CHECK_THROWS_AS(load_label_source(dir / "bad.txt"), ParseError);
  }

  TEST_CASE("agreement with a reference source") {
    LabeledEdgeSet set;
    set.entries = {make_labeled_edge(1, 2, RelLabel::kP2C, Provenance::kVote),
                   make_labeled_edge(3, 4, RelLabel::kP2P, Provenance::kVote),
                   make_labeled_edge(5, 6, RelLabel::kP2P, Provenance::kVote)};
    const auto ref = source("community", {{2, 1, -1}, {3, 4, 0}});
    const auto a = agreement_with(set, ref);
    CHECK(a.compared == 2);
    CHECK(a.matched == 1);
    CHECK(a.accuracy == 0.5);
  }
}
