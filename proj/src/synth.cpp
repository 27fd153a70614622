#include "asrel/synth.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "asrel/dataset.hpp"
#include "asrel/io.hpp"
#include "asrel/parallel.hpp"

namespace asrel {

namespace fs = std::filesystem;

namespace {

std::uint64_t pair_key(Asn a, Asn b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kStreamVantage = 1;
constexpr std::uint64_t kStreamDestinations = 2;
constexpr std::uint64_t kStreamLabels = 3;

}  // namespace

void SynthConfig::validate() const {
  if (n_tier1 < 1) throw std::invalid_argument("synthetic topology needs at least one tier-1 AS");
  if (n_mid < 0 || n_stub < 0 || n_ixp < 0 || n_orgs < 0 || n_vps < 0 || paths_per_vp < 0) {
    throw std::invalid_argument("synthetic counts must be non-negative");
  }
  if (2 * n_orgs > n_stub) throw std::invalid_argument("n_orgs needs at least two stubs per group");
  if (n_ixp > 0 && n_mid + n_stub < 2) throw std::invalid_argument("IXPs need at least two members");
  if (n_vps > n_tier1 + n_mid + n_stub) {
    throw std::invalid_argument("n_vps exceeds the number of non-IXP nodes");
  }
}

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::kTier1:
      return "tier1";
    case Tier::kMid:
      return "mid";
    case Tier::kStub:
      return "stub";
    case Tier::kIxp:
      return "ixp";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// GroundTruth

GroundTruth::GroundTruth(std::vector<SynthNode> nodes, std::vector<PlantedLink> links)
    : nodes_(std::move(nodes)), links_(std::move(links)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!node_index_.emplace(nodes_[i].asn, i).second) throw std::invalid_argument("duplicate ASN");
  }
  adjacency_.resize(nodes_.size());
  for (std::size_t e = 0; e < links_.size(); ++e) {
    const auto& l = links_[e];
    if (l.a == l.b) throw std::invalid_argument("self link");
    if (!link_index_.emplace(pair_key(l.a, l.b), e).second) throw std::invalid_argument("duplicate link");
    const auto ia = node_index_.at(l.a);
    const auto ib = node_index_.at(l.b);
    Step from_a = Step::kPeer;
    Step from_b = Step::kPeer;
    switch (l.label) {
      case RelLabel::kP2C:
        from_a = Step::kDown;
        from_b = Step::kUp;
        break;
      case RelLabel::kS2S:
        from_a = from_b = Step::kSibling;
        break;
      case RelLabel::kX2X:
        from_a = nodes_[ib].tier == Tier::kIxp ? Step::kToIxp : Step::kFromIxp;
        from_b = nodes_[ia].tier == Tier::kIxp ? Step::kToIxp : Step::kFromIxp;
        break;
      case RelLabel::kP2P:
        break;
    }
    adjacency_[ia].emplace_back(l.b, from_a);
    adjacency_[ib].emplace_back(l.a, from_b);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

const SynthNode& GroundTruth::node(Asn asn) const {
  const auto it = node_index_.find(asn);
  if (it == node_index_.end()) throw std::out_of_range("AS" + std::to_string(asn) + " is not planted");
  return nodes_[it->second];
}

std::optional<PlantedLink> GroundTruth::link(Asn a, Asn b) const {
  const auto it = link_index_.find(pair_key(a, b));
  if (it == link_index_.end()) return std::nullopt;
  return links_[it->second];
}

std::optional<Step> GroundTruth::step(Asn from, Asn to) const {
  const auto it = node_index_.find(from);
  if (it == node_index_.end()) return std::nullopt;
  const auto& adj = adjacency_[it->second];
  const auto pos = std::lower_bound(adj.begin(), adj.end(), std::pair<Asn, Step>{to, Step::kUp},
                                    [](const auto& x, const auto& y) { return x.first < y.first; });
  if (pos == adj.end() || pos->first != to) return std::nullopt;
  return pos->second;
}

std::vector<Asn> GroundTruth::tier1() const {
  std::vector<Asn> out;
  for (const auto& n : nodes_) {
    if (n.tier == Tier::kTier1) out.push_back(n.asn);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::span<const std::pair<Asn, Step>> GroundTruth::neighbors(Asn asn) const {
  const auto it = node_index_.find(asn);
  if (it == node_index_.end()) throw std::out_of_range("AS" + std::to_string(asn) + " is not planted");
  return adjacency_[it->second];
}

// ---------------------------------------------------------------------------
// Generation

GroundTruth generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  auto pick_count = [&](std::initializer_list<double> weights) {
    return 1 + static_cast<int>(std::discrete_distribution<int>(weights)(rng));
  };

  const int t1 = config.n_tier1;
  const int mid0 = t1;
  const int stub0 = mid0 + config.n_mid;
  const int ixp0 = stub0 + config.n_stub;
  const int n = config.total_nodes();

  std::vector<SynthNode> nodes(static_cast<std::size_t>(n));
  {
    // Distinct random ASNs so that numbering carries no tier information.
    const Asn space = std::max<Asn>(64495, static_cast<Asn>(4 * n));
    std::set<Asn> used;
    for (auto& node : nodes) {
      Asn a = 0;
      do {
        a = std::uniform_int_distribution<Asn>(1, space)(rng);
      } while (!used.insert(a).second);
      node.asn = a;
    }
  }
  for (int i = 0; i < n; ++i) {
    auto& node = nodes[static_cast<std::size_t>(i)];
    node.tier = i < mid0 ? Tier::kTier1 : i < stub0 ? Tier::kMid : i < ixp0 ? Tier::kStub : Tier::kIxp;
  }

  std::vector<PlantedLink> links;
  std::set<std::pair<int, int>> linked;
  auto add = [&](int a, int b, RelLabel label) {
    if (a == b || !linked.insert({std::min(a, b), std::max(a, b)}).second) return false;
    const Asn x = nodes[static_cast<std::size_t>(a)].asn;
    const Asn y = nodes[static_cast<std::size_t>(b)].asn;
    if (label == RelLabel::kP2C) {
      links.push_back({x, y, label});
    } else {
      links.push_back({std::min(x, y), std::max(x, y), label});
    }
    return true;
  };

  for (int a = 0; a < t1; ++a) {
    for (int b = a + 1; b < t1; ++b) add(a, b, RelLabel::kP2P);
  }

  for (int m = mid0; m < stub0; ++m) {
    const int want = pick_count({0.5, 0.35, 0.15});
    for (int k = 0, attempts = 0; k < want && attempts < 20; ++attempts) {
      const bool from_tier1 = m == mid0 || chance(0.7);
      const int p = from_tier1 ? uniform(0, t1 - 1) : uniform(mid0, m - 1);
      if (add(p, m, RelLabel::kP2C)) ++k;
    }
  }
  for (int k = 0; k < config.n_mid && config.n_mid >= 2; ++k) {
    add(uniform(mid0, stub0 - 1), uniform(mid0, stub0 - 1), RelLabel::kP2P);
  }

  // Sibling groups: the first member of each group is its head.
  std::vector<int> stubs(static_cast<std::size_t>(config.n_stub));
  std::iota(stubs.begin(), stubs.end(), stub0);
  std::shuffle(stubs.begin(), stubs.end(), rng);
  std::vector<std::vector<int>> orgs;
  std::vector<int> head_of(static_cast<std::size_t>(n), -1);
  for (std::size_t pos = 0; static_cast<int>(orgs.size()) < config.n_orgs;) {
    // Leave at least two stubs for every group still to come.
    const std::size_t later = static_cast<std::size_t>(config.n_orgs) - orgs.size() - 1;
    const std::size_t room = stubs.size() - pos - 2 * later;
    const auto size = std::min<std::size_t>(room, static_cast<std::size_t>(uniform(2, 4)));
    auto& group = orgs.emplace_back(stubs.begin() + static_cast<long>(pos),
                                    stubs.begin() + static_cast<long>(pos + size));
    pos += size;
    for (const int member : group) {
      nodes[static_cast<std::size_t>(member)].org = static_cast<int>(orgs.size()) - 1;
      if (member != group.front()) head_of[static_cast<std::size_t>(member)] = group.front();
    }
  }

  std::vector<int> first_provider(static_cast<std::size_t>(n), -1);
  auto buy_transit = [&](int s) {
    const int want = pick_count({0.6, 0.3, 0.1});
    for (int k = 0, attempts = 0; k < want && attempts < 20; ++attempts) {
      const bool from_tier1 = config.n_mid == 0 || chance(0.2);
      const int p = from_tier1 ? uniform(0, t1 - 1) : uniform(mid0, stub0 - 1);
      if (add(p, s, RelLabel::kP2C)) {
        if (k == 0) first_provider[static_cast<std::size_t>(s)] = p;
        ++k;
      }
    }
  };
  for (int s = stub0; s < ixp0; ++s) {
    if (head_of[static_cast<std::size_t>(s)] < 0) buy_transit(s);
  }
  // Non-head members either reach the Internet only through their siblings or
  // share the head's primary provider.
  for (int s = stub0; s < ixp0; ++s) {
    const int head = head_of[static_cast<std::size_t>(s)];
    if (head < 0 || !chance(0.5)) continue;
    const int p = first_provider[static_cast<std::size_t>(head)];
    if (p >= 0) add(p, s, RelLabel::kP2C);
  }
  for (const auto& group : orgs) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) add(group[i], group[j], RelLabel::kS2S);
    }
  }

  std::vector<int> ixp_pool(static_cast<std::size_t>(config.n_mid + config.n_stub));
  std::iota(ixp_pool.begin(), ixp_pool.end(), mid0);
  for (int x = ixp0; x < n; ++x) {
    std::shuffle(ixp_pool.begin(), ixp_pool.end(), rng);
    const auto members = std::min<std::size_t>(ixp_pool.size(), static_cast<std::size_t>(uniform(8, 20)));
    for (std::size_t k = 0; k < members; ++k) add(x, ixp_pool[k], RelLabel::kX2X);
  }

  auto draw_type = [&](std::initializer_list<double> w) {
    return static_cast<AsType>(std::discrete_distribution<int>(w)(rng));
  };
  for (int i = 0; i < n; ++i) {
    auto& node = nodes[static_cast<std::size_t>(i)];
    switch (node.tier) {
      case Tier::kTier1:
        node.type = AsType::kTransitAccess;
        break;
      case Tier::kMid:
        node.type = draw_type({0.85, 0.1, 0.04, 0.01});
        break;
      case Tier::kStub:
        node.type = draw_type({0.25, 0.25, 0.45, 0.05});
        break;
      case Tier::kIxp:
        node.type = AsType::kUnknown;
        break;
    }
  }
  for (const auto& group : orgs) {
    for (const int member : group) {
      nodes[static_cast<std::size_t>(member)].type = nodes[static_cast<std::size_t>(group.front())].type;
    }
  }
  return GroundTruth(std::move(nodes), std::move(links));
}

bool p2c_acyclic(const GroundTruth& truth) {
  std::unordered_map<Asn, std::size_t> indegree;
  std::unordered_map<Asn, std::vector<Asn>> customers;
  for (const auto& l : truth.links()) {
    if (l.label != RelLabel::kP2C) continue;
    ++indegree[l.b];
    indegree.try_emplace(l.a, 0);
    customers[l.a].push_back(l.b);
  }
  std::vector<Asn> ready;
  for (const auto& [asn, d] : indegree) {
    if (d == 0) ready.push_back(asn);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const Asn a = ready.back();
    ready.pop_back();
    ++visited;
    for (const Asn c : customers[a]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  return visited == indegree.size();
}

// ---------------------------------------------------------------------------
// Routing

bool is_valley_free(const GroundTruth& truth, std::span<const Asn> hops) {
  enum { kUphill, kDownhill } phase = kUphill;
  for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
    const auto s = truth.step(hops[i], hops[i + 1]);
    if (!s) return false;
    switch (*s) {
      case Step::kSibling:
        break;
      case Step::kUp:
        if (phase != kUphill) return false;
        break;
      case Step::kDown:
        phase = kDownhill;
        break;
      case Step::kPeer:
        if (phase != kUphill) return false;
        phase = kDownhill;
        break;
      case Step::kToIxp:
        if (phase != kUphill) return false;
        // Leaving the IXP again belongs to the same peering.
        if (i + 2 < hops.size()) {
          if (truth.step(hops[i + 1], hops[i + 2]) != Step::kFromIxp) return false;
          ++i;
        }
        phase = kDownhill;
        break;
      case Step::kFromIxp:
        // Only a path that starts at the IXP gets here.
        if (i != 0) return false;
        phase = kDownhill;
        break;
    }
  }
  return true;
}

namespace {

// Route state while walking away from the VP: still allowed to climb, sitting
// on an IXP after entering it, or descending.
enum RouteState : std::uint8_t { kClimb = 0, kAtIxp = 1, kDescend = 2 };
constexpr int kStates = 3;

std::optional<RouteState> transition(RouteState state, Step step) {
  switch (state) {
    case kClimb:
      switch (step) {
        case Step::kUp:
        case Step::kSibling:
          return kClimb;
        case Step::kPeer:
        case Step::kDown:
          return kDescend;
        case Step::kToIxp:
          return kAtIxp;
        case Step::kFromIxp:
          return std::nullopt;
      }
      break;
    case kAtIxp:
      if (step == Step::kFromIxp) return kDescend;
      return std::nullopt;
    case kDescend:
      if (step == Step::kDown || step == Step::kSibling) return kDescend;
      return std::nullopt;
  }
  return std::nullopt;
}

struct RouteTree {
  std::unordered_map<Asn, std::size_t> slot;  // ASN -> node slot
  std::vector<int> parent;                    // per (slot, state); -1 = unset, -2 = root
  std::vector<int> dist;
  std::vector<int> order;                     // discovery rank
};

/// BFS over (AS, state). Neighbors are scanned in ascending ASN, so among
/// equally short routes the one through the lowest first hop is found first.
RouteTree route_from(const GroundTruth& truth, Asn vp) {
  RouteTree t;
  const auto nodes = truth.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) t.slot.emplace(nodes[i].asn, i);
  const std::size_t states = nodes.size() * kStates;
  t.parent.assign(states, -1);
  t.dist.assign(states, -1);
  t.order.assign(states, -1);

  const RouteState start = truth.is_ixp(vp) ? kAtIxp : kClimb;
  const int root = static_cast<int>(t.slot.at(vp) * kStates + start);
  std::deque<int> queue{root};
  t.parent[static_cast<std::size_t>(root)] = -2;
  t.dist[static_cast<std::size_t>(root)] = 0;
  int rank = 0;
  t.order[static_cast<std::size_t>(root)] = rank++;
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    const auto state = static_cast<RouteState>(cur % kStates);
    const Asn asn = nodes[static_cast<std::size_t>(cur / kStates)].asn;
    for (const auto& [next, step] : truth.neighbors(asn)) {
      const auto ns = transition(state, step);
      if (!ns) continue;
      const auto id = static_cast<std::size_t>(t.slot.at(next) * kStates + *ns);
      if (t.dist[id] >= 0) continue;
      t.dist[id] = t.dist[static_cast<std::size_t>(cur)] + 1;
      t.parent[id] = cur;
      t.order[id] = rank++;
      queue.push_back(static_cast<int>(id));
    }
  }
  return t;
}

std::optional<std::vector<Asn>> extract_route(const GroundTruth& truth, const RouteTree& t, Asn dst) {
  const std::size_t base = t.slot.at(dst) * kStates;
  int best = -1;
  for (int s = 0; s < kStates; ++s) {
    const auto id = base + static_cast<std::size_t>(s);
    if (t.dist[id] < 0) continue;
    if (best < 0 || t.dist[id] < t.dist[static_cast<std::size_t>(best)] ||
        (t.dist[id] == t.dist[static_cast<std::size_t>(best)] &&
         t.order[id] < t.order[static_cast<std::size_t>(best)])) {
      best = static_cast<int>(id);
    }
  }
  if (best < 0) return std::nullopt;
  std::vector<Asn> hops;
  for (int cur = best; cur != -2; cur = t.parent[static_cast<std::size_t>(cur)]) {
    hops.push_back(truth.nodes()[static_cast<std::size_t>(cur / kStates)].asn);
  }
  std::reverse(hops.begin(), hops.end());
  return hops;
}

}  // namespace

SimulationResult simulate_paths(const GroundTruth& truth, const SynthConfig& config, unsigned threads) {
  config.validate();
  SimulationResult result;
  std::vector<Asn> candidates;
  std::vector<Asn> all;
  for (const auto& node : truth.nodes()) {
    all.push_back(node.asn);
    if (node.tier != Tier::kIxp) candidates.push_back(node.asn);
  }
  std::sort(candidates.begin(), candidates.end());
  std::sort(all.begin(), all.end());
  auto vp_rng = derived_rng(config.seed, kStreamVantage);
  std::shuffle(candidates.begin(), candidates.end(), vp_rng);
  candidates.resize(std::min(candidates.size(), static_cast<std::size_t>(config.n_vps)));
  std::sort(candidates.begin(), candidates.end());
  result.vantage_points = candidates;

  struct PerVp {
    std::vector<AsPath> paths;
    std::size_t unreachable = 0;
  };
  std::vector<PerVp> per_vp(result.vantage_points.size());
  parallel_for(per_vp.size(), threads, [&](std::size_t v) {
    const Asn vp = result.vantage_points[v];
    std::vector<Asn> dests;
    for (const Asn a : all) {
      if (a != vp) dests.push_back(a);
    }
    if (config.paths_per_vp > 0 && static_cast<std::size_t>(config.paths_per_vp) < dests.size()) {
      auto rng = derived_rng(config.seed, kStreamDestinations, vp);
      std::shuffle(dests.begin(), dests.end(), rng);
      dests.resize(static_cast<std::size_t>(config.paths_per_vp));
      std::sort(dests.begin(), dests.end());
    }
    const auto tree = route_from(truth, vp);
    for (const Asn d : dests) {
      auto hops = extract_route(truth, tree, d);
      if (!hops) {
        ++per_vp[v].unreachable;
        continue;
      }
      per_vp[v].paths.push_back({std::move(*hops), 0});
    }
  });
  for (auto& p : per_vp) {
    result.unreachable += p.unreachable;
    for (auto& path : p.paths) {
      path.source_line = result.paths.size() + 1;
      result.paths.push_back(std::move(path));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Export

std::vector<fs::path> export_synthetic(const GroundTruth& truth, const SimulationResult& sim,
                                       const SynthConfig& config, const ExportOptions& options,
                                       const fs::path& dir) {
  if (!(options.perturbation >= 0.0 && options.perturbation <= 1.0)) {
    throw std::invalid_argument("perturbation must be in [0, 1]");
  }
  if (options.label_sources < 2) throw std::invalid_argument("need at least two label sources");
  fs::create_directories(dir);
  std::vector<fs::path> written;
  auto open = [&](const char* name) {
    written.push_back(dir / name);
    return io::open_output(written.back());
  };

  {
    auto out = open("paths.txt");
    out << "# synthetic paths, seed " << config.seed << '\n';
    write_paths(out, sim.paths);
  }
  {
    // Merge the planted ASNs into allocated ranges.
    std::vector<Asn> asns;
    for (const auto& n : truth.nodes()) asns.push_back(n.asn);
    std::sort(asns.begin(), asns.end());
    auto out = open("alloc.txt");
    for (std::size_t i = 0; i < asns.size();) {
      std::size_t j = i;
      while (j + 1 < asns.size() && asns[j + 1] == asns[j] + 1) ++j;
      if (i == j) {
        out << asns[i] << '\n';
      } else {
        out << asns[i] << '-' << asns[j] << '\n';
      }
      i = j + 1;
    }
  }

  // Observed links in ascending pair order.
  std::set<std::pair<Asn, Asn>> observed;
  for (const auto& p : sim.paths) {
    for (std::size_t i = 0; i + 1 < p.hops.size(); ++i) {
      observed.insert({std::min(p.hops[i], p.hops[i + 1]), std::max(p.hops[i], p.hops[i + 1])});
    }
  }
  for (int k = 1; k <= options.label_sources; ++k) {
    auto rng = derived_rng(config.seed, kStreamLabels, static_cast<std::uint64_t>(k));
    std::bernoulli_distribution flip(options.perturbation);
    LabelSource source;
    source.name = "synthetic-" + std::to_string(k);
    for (const auto& [lo, hi] : observed) {
      const auto link = truth.link(lo, hi);
      if (!link) throw std::logic_error("simulated path uses an unplanted link");
      SourceEntry e{lo, hi, kCodePeer};
      if (link->label == RelLabel::kP2C) e = {link->a, link->b, kCodeProviderCustomer};
      if (link->label == RelLabel::kS2S) e = {lo, hi, kCodeProviderCustomer};
      if (flip(rng)) {
        e = e.code == kCodePeer ? SourceEntry{lo, hi, kCodeProviderCustomer} : SourceEntry{lo, hi, kCodePeer};
      }
      source.entries.push_back(e);
    }
    const std::string name = "labels_" + std::to_string(k) + ".txt";
    auto out = open(name.c_str());
    write_label_source(out, source);
  }

  {
    auto out = open("orgs.csv");
    out << "asn,org_id\n";
    for (const auto& n : truth.nodes()) {
      if (n.org >= 0) out << n.asn << ",org" << n.org << '\n';
    }
  }
  {
    auto out = open("ixps.txt");
    for (const auto& n : truth.nodes()) {
      if (n.tier == Tier::kIxp) out << n.asn << '\n';
    }
  }
  {
    auto out = open("types.csv");
    out << "asn,type\n";
    for (const auto& n : truth.nodes()) out << n.asn << ',' << to_string(n.type) << '\n';
  }
  {
    auto out = open("answer_key.csv");
    out << "a,b,label\n";
    std::vector<PlantedLink> links(truth.links().begin(), truth.links().end());
    std::sort(links.begin(), links.end(), [](const PlantedLink& x, const PlantedLink& y) {
      return std::pair(std::min(x.a, x.b), std::max(x.a, x.b)) < std::pair(std::min(y.a, y.b), std::max(y.a, y.b));
    });
    for (const auto& l : links) out << l.a << ',' << l.b << ',' << to_string(l.label) << '\n';
  }
  return written;
}

}  // namespace asrel
