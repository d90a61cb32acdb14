#include "grouptrack/protocol.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace grouptrack::protocol {
namespace {

double distance(std::span<const Vec2> positions, NodeId a, NodeId b) {
  return (positions[a] - positions[b]).norm();
}

}  // namespace

bool ClusterView::contains(NodeId id) const {
  return std::binary_search(members.begin(), members.end(), id);
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kForm: return "form";
    case EventKind::kMerge: return "merge";
    case EventKind::kLeave: return "leave";
    case EventKind::kJoin: return "join";
    case EventKind::kSingleton: return "singleton";
  }
  return "?";
}

void write_events_csv(std::ostream& os, std::span<const ProtocolEvent> events) {
  os << "t,event,node_id,ch_id,cluster_size\n";
  for (const auto& e : events) {
    os << e.t << ',' << to_string(e.kind) << ',' << e.node_id << ',' << e.ch_id << ','
       << e.cluster_size << '\n';
  }
}

std::vector<ClusterView> form_clusters(std::span<const Vec2> positions,
                                       std::span<const double> timers, double comm_range,
                                       const channel::RssiRanger& ranger, Rng& rng, double t) {
  if (timers.size() != positions.size())
    throw std::invalid_argument("form_clusters: one timer per node is required");
  const std::size_t n = positions.size();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return timers[a] < timers[b]; });

  std::vector<NodeId> heads;
  for (NodeId id : order) {
    const bool covered = std::any_of(heads.begin(), heads.end(), [&](NodeId ch) {
      return distance(positions, id, ch) <= comm_range;
    });
    if (!covered) heads.push_back(id);
  }
  std::sort(heads.begin(), heads.end());

  std::vector<ClusterView> clusters;
  clusters.reserve(heads.size());
  for (NodeId ch : heads) clusters.push_back(ClusterView{ch, {ch}, t});

  for (NodeId id = 0; id < n; ++id) {
    if (std::binary_search(heads.begin(), heads.end(), id)) continue;
    std::size_t best = clusters.size();
    double best_range = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const double d = distance(positions, id, clusters[c].ch_id);
      if (d > comm_range) continue;
      const double estimate = ranger.estimate_distance(d, rng);
      if (estimate < best_range) {
        best_range = estimate;
        best = c;
      }
    }
    // Every non-CH node is within range of some CH by construction.
    clusters[best].members.push_back(id);
  }
  for (auto& c : clusters) std::sort(c.members.begin(), c.members.end());
  return clusters;
}

std::vector<ClusterView> form_clusters(std::span<const Vec2> positions, double comm_range,
                                       const channel::RssiRanger& ranger, Rng& rng, double t) {
  std::uniform_real_distribution<double> timer(0.0, 1.0);
  std::vector<double> timers(positions.size());
  for (auto& v : timers) v = timer(rng);
  return form_clusters(positions, timers, comm_range, ranger, rng, t);
}

ClusterView merge_clusters(const ClusterView& a, const ClusterView& b) {
  if (a.ch_id == b.ch_id) return a;
  const bool a_wins = a.size() > b.size() || (a.size() == b.size() && a.ch_id < b.ch_id);
  const ClusterView& winner = a_wins ? a : b;
  const ClusterView& loser = a_wins ? b : a;
  ClusterView merged = winner;
  merged.members.clear();
  std::set_union(winner.members.begin(), winner.members.end(), loser.members.begin(),
                 loser.members.end(), std::back_inserter(merged.members));
  return merged;
}

MembershipState record_update_outcome(MembershipState state, bool received) {
  if (received) {
    state.missed_updates = 0;
    return state;
  }
  state.missed_updates = std::min(state.missed_updates + 1, kMaxMissedUpdates);
  if (state.missed_updates >= kMaxMissedUpdates) state.cluster.reset();
  return state;
}

std::optional<std::size_t> reassign_orphan(NodeId node, std::span<const ClusterView> clusters,
                                           std::span<const Vec2> positions, double comm_range,
                                           const channel::RssiRanger& ranger, Rng& rng) {
  std::optional<std::size_t> best;
  double best_range = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const NodeId ch = clusters[c].ch_id;
    if (ch == node) continue;
    const double d = distance(positions, node, ch);
    if (d > comm_range) continue;
    const double estimate = ranger.estimate_distance(d, rng);
    if (estimate < best_range) {
      best_range = estimate;
      best = c;
    }
  }
  return best;
}

ClusterTable::ClusterTable(std::size_t n_nodes) : membership_(n_nodes) {
  for (std::size_t i = 0; i < n_nodes; ++i) membership_[i].node_id = static_cast<NodeId>(i);
}

void ClusterTable::sort_clusters() {
  std::sort(clusters_.begin(), clusters_.end(),
            [](const ClusterView& a, const ClusterView& b) { return a.ch_id < b.ch_id; });
}

std::size_t ClusterTable::index_of_ch(NodeId ch) const {
  const auto it = std::lower_bound(clusters_.begin(), clusters_.end(), ch,
                                   [](const ClusterView& c, NodeId id) { return c.ch_id < id; });
  if (it == clusters_.end() || it->ch_id != ch)
    throw std::logic_error("cluster table: no cluster headed by node " + std::to_string(ch));
  return static_cast<std::size_t>(it - clusters_.begin());
}

const ClusterView& ClusterTable::cluster_of(NodeId id) const {
  const auto& m = membership_.at(id);
  if (!m.cluster) throw std::logic_error("cluster table: node " + std::to_string(id) + " has no cluster");
  return clusters_[index_of_ch(*m.cluster)];
}

void ClusterTable::form(std::span<const Vec2> positions, double comm_range,
                        const channel::RssiRanger& ranger, Rng& rng, std::int64_t t,
                        std::vector<ProtocolEvent>* events) {
  clusters_ = form_clusters(positions, comm_range, ranger, rng, static_cast<double>(t));
  for (auto& m : membership_) {
    m.cluster.reset();
    m.missed_updates = 0;
  }
  for (const auto& c : clusters_) {
    for (NodeId id : c.members) {
      membership_[id].cluster = c.ch_id;
      if (events) events->push_back({t, EventKind::kForm, id, c.ch_id, c.size()});
    }
  }
}

void ClusterTable::merge_in_range(std::span<const Vec2> positions, double comm_range,
                                  std::int64_t t, std::vector<ProtocolEvent>* events) {
  std::vector<std::size_t> order(clusters_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (clusters_[a].size() != clusters_[b].size())
      return clusters_[a].size() > clusters_[b].size();
    return clusters_[a].ch_id < clusters_[b].ch_id;
  });

  std::vector<bool> alive(clusters_.size(), true);
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (!alive[i]) continue;
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (!alive[j]) continue;
      if (distance(positions, clusters_[i].ch_id, clusters_[j].ch_id) > comm_range) continue;
      const NodeId absorbed_ch = clusters_[j].ch_id;
      const std::vector<NodeId> absorbed = clusters_[j].members;
      clusters_[i] = merge_clusters(clusters_[i], clusters_[j]);
      alive[j] = false;
      for (NodeId id : absorbed) {
        membership_[id].cluster = clusters_[i].ch_id;
        membership_[id].missed_updates = 0;
      }
      if (events)
        events->push_back({t, EventKind::kMerge, absorbed_ch, clusters_[i].ch_id,
                           clusters_[i].size()});
    }
  }

  std::vector<ClusterView> kept;
  kept.reserve(clusters_.size());
  for (std::size_t i = 0; i < clusters_.size(); ++i)
    if (alive[i]) kept.push_back(std::move(clusters_[i]));
  clusters_ = std::move(kept);
  sort_clusters();
}

std::vector<NodeId> ClusterTable::record_updates(const std::vector<bool>& received, std::int64_t t,
                                                 std::vector<ProtocolEvent>* events) {
  std::vector<NodeId> leavers;
  for (auto& c : clusters_) {
    std::vector<NodeId> stay;
    std::vector<NodeId> left;
    stay.reserve(c.members.size());
    for (NodeId id : c.members) {
      if (id != c.ch_id) membership_[id] = record_update_outcome(membership_[id], received[id]);
      if (membership_[id].cluster) {
        stay.push_back(id);
      } else {
        left.push_back(id);
      }
    }
    if (left.empty()) continue;
    c.members = std::move(stay);
    for (NodeId id : left) {
      leavers.push_back(id);
      if (events) events->push_back({t, EventKind::kLeave, id, c.ch_id, c.size()});
    }
  }
  std::sort(leavers.begin(), leavers.end());
  return leavers;
}

NodeId ClusterTable::place_orphan(NodeId node, std::span<const Vec2> positions,
                                  double comm_range, const channel::RssiRanger& ranger,
                                  Rng& rng, std::int64_t t, std::vector<ProtocolEvent>* events) {
  auto& state = membership_[node];
  if (state.cluster) {
    const ClusterView& own = clusters_[index_of_ch(*state.cluster)];
    // Only lone CHs go looking for a bigger cluster; members stay put.
    if (own.ch_id != node || own.size() > 1) return *state.cluster;
  }

  const auto target = reassign_orphan(node, clusters_, positions, comm_range, ranger, rng);
  if (!target) {
    if (!state.cluster) {
      clusters_.push_back(ClusterView{node, {node}, static_cast<double>(t)});
      sort_clusters();
      state.cluster = node;
      state.missed_updates = 0;
      if (events) events->push_back({t, EventKind::kSingleton, node, node, 1});
    }
    return node;
  }

  const NodeId ch = clusters_[*target].ch_id;
  if (state.cluster) clusters_.erase(clusters_.begin() + static_cast<std::ptrdiff_t>(index_of_ch(node)));
  ClusterView& dest = clusters_[index_of_ch(ch)];
  dest.members.insert(std::upper_bound(dest.members.begin(), dest.members.end(), node), node);
  state.cluster = ch;
  state.missed_updates = 0;
  if (events) events->push_back({t, EventKind::kJoin, node, ch, dest.size()});
  return ch;
}

void ClusterTable::check_invariants() const {
  std::vector<int> seen(membership_.size(), 0);
  for (const auto& c : clusters_) {
    if (c.members.empty()) throw std::logic_error("invariant: empty cluster");
    if (!c.contains(c.ch_id)) throw std::logic_error("invariant: CH not a member of its cluster");
    if (!std::is_sorted(c.members.begin(), c.members.end()))
      throw std::logic_error("invariant: member list not sorted");
    for (NodeId id : c.members) {
      if (id >= seen.size()) throw std::logic_error("invariant: unknown node id");
      if (++seen[id] > 1)
        throw std::logic_error("invariant: node " + std::to_string(id) + " in two clusters");
      if (membership_[id].cluster != c.ch_id)
        throw std::logic_error("invariant: membership state disagrees with cluster table");
    }
  }
  for (std::size_t id = 0; id < seen.size(); ++id) {
    if (seen[id] != 1)
      throw std::logic_error("invariant: node " + std::to_string(id) + " has no cluster");
    if (membership_[id].missed_updates > kMaxMissedUpdates || membership_[id].missed_updates < 0)
      throw std::logic_error("invariant: missed update counter out of range");
  }
}

}  // namespace grouptrack::protocol
