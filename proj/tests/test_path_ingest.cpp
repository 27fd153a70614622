#include <fstream>
#include <sstream>

#include "asrel/io.hpp"
#include "asrel/path_ingest.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace asrel;

namespace {

AsPath hops(std::vector<Asn> h) { return {std::move(h), 0}; }

bool has_nonadjacent_repeat(const std::vector<Asn>& h) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = i + 2; j < h.size(); ++j) {
      if (h[i] == h[j]) return true;
    }
  }
  return false;
}

bool is_subsequence(const std::vector<Asn>& sub, const std::vector<Asn>& full) {
  std::size_t i = 0;
  for (const Asn a : full) {
    if (i < sub.size() && sub[i] == a) ++i;
  }
  return i == sub.size();
}

}  // namespace

TEST_SUITE("path_ingest") {
  TEST_CASE("parse_path_line splits pipe-separated hops in file order") {
    CHECK(parse_path_line("6939|4826|38803|56203").hops == std::vector<Asn>{6939, 4826, 38803, 56203});
    CHECK(parse_path_line("100").hops == std::vector<Asn>{100});
    CHECK(parse_path_line(" 1 | 2 ").hops == std::vector<Asn>{1, 2});
  }

  TEST_CASE("parse_path_line rejects malformed input with the line number") {
    CHECK_THROWS_AS(parse_path_line("1|2|x", 3), ParseError);
    try {
      parse_path_line("1|2|x", 3);
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_path_line(""), ParseError);
    CHECK_THROWS_AS(parse_path_line("1||2"), ParseError);
    CHECK_THROWS_AS(parse_path_line("0|5"), ParseError);
    CHECK_THROWS_AS(parse_path_line("4294967296"), ParseError);
    CHECK(parse_path_line("4294967295").hops.front() == 4294967295u);
  }

  TEST_CASE("sanitize compresses prepending before checking loops") {
    const auto r = sanitize(hops({1, 2, 3, 3}), nullptr);
    REQUIRE(r.accepted());
    CHECK(r.compressed);
    CHECK(r.path.hops == std::vector<Asn>{1, 2, 3});

    const auto loop = sanitize(hops({1, 2, 1}), nullptr);
    REQUIRE_FALSE(loop.accepted());
    CHECK(*loop.rejection == RejectReason::kLoop);

    const auto same = sanitize(hops({5, 5, 5}), nullptr);
    REQUIRE(same.accepted());
    CHECK(same.path.hops == std::vector<Asn>{5});
  }

  TEST_CASE("sanitize drops paths with unallocated hops only when a table is given") {
    const AllocationTable table({{1, 100}, {200, 300}});
    CHECK(sanitize(hops({1, 250}), &table).accepted());
    const auto r = sanitize(hops({1, 150}), &table);
    REQUIRE_FALSE(r.accepted());
    CHECK(*r.rejection == RejectReason::kUnallocated);
    CHECK(sanitize(hops({1, 150}), nullptr).accepted());
  }

  TEST_CASE("allocation table merges ranges and rejects empty files") {
    std::istringstream in("# registry\n10-20\n15-30\n40\n\n");
    const auto t = AllocationTable::parse(in);
    REQUIRE(t.ranges().size() == 2);
    CHECK(t.contains(10));
    CHECK(t.contains(30));
    CHECK_FALSE(t.contains(31));
    CHECK(t.contains(40));
    std::istringstream empty("# nothing\n");
    CHECK_THROWS_AS(AllocationTable::parse(empty), ParseError);
    std::istringstream bad("20-10\n");
    CHECK_THROWS_AS(AllocationTable::parse(bad), ParseError);
  }

  TEST_CASE("ingest counts each outcome and keeps file order") {
    std::istringstream in("# comment\n1|2|3\n4|5|5\n\n7|8|7\n9|10\n");
    const auto r = ingest_stream(in, nullptr);
    CHECK(r.report.parsed == 4);
    CHECK(r.report.compressed == 1);
    CHECK(r.report.rejected_loop == 1);
    CHECK(r.report.rejected_unallocated == 0);
    REQUIRE(r.paths.size() == 3);
    CHECK(r.paths[0].hops == std::vector<Asn>{1, 2, 3});
    CHECK(r.paths[1].hops == std::vector<Asn>{4, 5});
    CHECK(r.paths[2].hops == std::vector<Asn>{9, 10});
    CHECK(r.paths[2].source_line == 6);
  }

  TEST_CASE("ingest of an empty stream yields nothing") {
    std::istringstream in("");
    const auto r = ingest_stream(in, nullptr);
    CHECK(r.paths.empty());
    CHECK(r.report == IngestReport{});
  }

  TEST_CASE("ingest_file names the file in parse errors and reports missing files") {
    const auto dir = testing::scratch_dir("ingest_file");
    const auto p = dir / "bad.txt";
    std::ofstream(p) << "1|2\n1|zz\n";
    try {
      ingest_file(p, nullptr);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("bad.txt") != std::string::npos);
    }
    CHECK_THROWS(ingest_file(dir / "missing.txt", nullptr));
  }

  TEST_CASE("report merge is associative and serializes every counter") {
    IngestReport a{3, 1, 1, 0};
    IngestReport b{2, 0, 0, 1};
    IngestReport c{5, 2, 1, 1};
    IngestReport left = a;
    (left += b) += c;
    IngestReport bc = b;
    bc += c;
    IngestReport right = a;
    right += bc;
    CHECK(left == right);
    CHECK(left.accepted() == 6);
    const auto json = left.to_json();
    for (const char* key : {"parsed", "compressed", "rejected_loop", "rejected_unallocated"}) {
      CHECK(json.find(key) != std::string::npos);
    }
  }

  TEST_CASE("property: sanitize is idempotent, order preserving and loop free") {
    testing::Rng rng(11);
    const AllocationTable table({{1, 40}});
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<Asn> h;
      const int len = testing::uniform_int(rng, 1, 9);
      for (int i = 0; i < len; ++i) h.push_back(static_cast<Asn>(testing::uniform_int(rng, 1, 45)));
      if (testing::uniform_int(rng, 0, 1)) h.insert(h.begin() + 1 % h.size(), h.front());
      const auto r = sanitize(hops(h), &table);
      if (!r.accepted()) {
        if (*r.rejection == RejectReason::kLoop) {
          std::vector<Asn> c(h);
          c.erase(std::unique(c.begin(), c.end()), c.end());
          CHECK(has_nonadjacent_repeat(c));
        }
        continue;
      }
      CHECK_FALSE(has_nonadjacent_repeat(r.path.hops));
      CHECK(is_subsequence(r.path.hops, h));
      CHECK(std::adjacent_find(r.path.hops.begin(), r.path.hops.end()) == r.path.hops.end());
      const auto again = sanitize(r.path, &table);
      REQUIRE(again.accepted());
      CHECK(again.path.hops == r.path.hops);
      CHECK_FALSE(again.compressed);
    }
  }

  TEST_CASE("write_paths round-trips through ingest") {
    std::vector<AsPath> paths{hops({1, 2, 3}), hops({7}), hops({9, 8})};
    std::ostringstream out;
    write_paths(out, paths);
    std::istringstream in(out.str());
    const auto back = ingest_stream(in, nullptr);
    CHECK(back.paths == paths);
    CHECK(format_path(paths[0]) == "1|2|3");
  }
}
