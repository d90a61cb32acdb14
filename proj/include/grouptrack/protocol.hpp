#pragma once

// Cluster lifecycle: random-timer CH election, RSSI-based membership,
// merging (the bigger cluster absorbs the smaller) and leaving after three
// missed scheduled updates.
//
// Node ids are dense: positions[id] is the current true position of node id.
// "Can hear" uses the true distance against comm_range; "which CH to prefer"
// uses an RSSI distance estimate.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "grouptrack/channel.hpp"
#include "grouptrack/rng.hpp"
#include "grouptrack/types.hpp"

namespace grouptrack::protocol {

inline constexpr int kMaxMissedUpdates = 3;

struct ClusterView {
  NodeId ch_id = 0;
  std::vector<NodeId> members;  // sorted ascending, includes ch_id
  double formation_time = 0.0;

  std::size_t size() const { return members.size(); }
  bool contains(NodeId id) const;
};

struct MembershipState {
  NodeId node_id = 0;
  std::optional<NodeId> cluster;  // CH id of the current cluster
  int missed_updates = 0;
};

enum class EventKind { kForm, kMerge, kLeave, kJoin, kSingleton };

std::string_view to_string(EventKind kind);

struct ProtocolEvent {
  std::int64_t t = 0;
  EventKind kind = EventKind::kForm;
  NodeId node_id = 0;
  NodeId ch_id = 0;
  std::size_t cluster_size = 0;
};

/// `t,event,node_id,ch_id,cluster_size`.
void write_events_csv(std::ostream& os, std::span<const ProtocolEvent> events);

/// Formation with explicit timers (one per node). Nodes claim CH in timer
/// order, ties to the lower id, unless a CH is already within range. Every
/// other node joins the in-range CH with the smallest RSSI distance.
std::vector<ClusterView> form_clusters(std::span<const Vec2> positions,
                                       std::span<const double> timers, double comm_range,
                                       const channel::RssiRanger& ranger, Rng& rng,
                                       double t = 0.0);

/// Same, drawing each node's timer uniformly on [0, 1).
std::vector<ClusterView> form_clusters(std::span<const Vec2> positions, double comm_range,
                                       const channel::RssiRanger& ranger, Rng& rng,
                                       double t = 0.0);

/// Larger cluster's CH wins; equal sizes go to the lower CH id.
ClusterView merge_clusters(const ClusterView& a, const ClusterView& b);

/// A received update resets the counter; the third consecutive miss clears
/// the cluster reference.
MembershipState record_update_outcome(MembershipState state, bool received);

/// Index of the cluster whose CH is in range and nearest by RSSI, or nullopt
/// when no CH can be heard (the node then starts its own cluster).
std::optional<std::size_t> reassign_orphan(NodeId node, std::span<const ClusterView> clusters,
                                           std::span<const Vec2> positions, double comm_range,
                                           const channel::RssiRanger& ranger, Rng& rng);

/// Live protocol state for a fixed node population.
class ClusterTable {
 public:
  explicit ClusterTable(std::size_t n_nodes);

  void form(std::span<const Vec2> positions, double comm_range,
            const channel::RssiRanger& ranger, Rng& rng, std::int64_t t,
            std::vector<ProtocolEvent>* events);

  /// Merges every pair of clusters whose CHs are within range.
  void merge_in_range(std::span<const Vec2> positions, double comm_range, std::int64_t t,
                      std::vector<ProtocolEvent>* events);

  /// Applies one scheduled update round. `received[id]` says whether node id
  /// heard its CH. Returns the nodes that left their cluster this round.
  std::vector<NodeId> record_updates(const std::vector<bool>& received, std::int64_t t,
                                     std::vector<ProtocolEvent>* events);

  /// Places a node that has no cluster, or moves a singleton CH into an
  /// in-range cluster. Returns the CH id the node ends up with.
  NodeId place_orphan(NodeId node, std::span<const Vec2> positions, double comm_range,
                      const channel::RssiRanger& ranger, Rng& rng, std::int64_t t,
                      std::vector<ProtocolEvent>* events);

  const std::vector<ClusterView>& clusters() const { return clusters_; }
  const MembershipState& membership(NodeId id) const { return membership_[id]; }
  std::size_t node_count() const { return membership_.size(); }
  const ClusterView& cluster_of(NodeId id) const;

  /// Partition, CH containment and counter bounds. Throws std::logic_error.
  void check_invariants() const;

 private:
  std::size_t index_of_ch(NodeId ch) const;
  void sort_clusters();

  std::vector<ClusterView> clusters_;  // sorted by ch_id
  std::vector<MembershipState> membership_;
};

}  // namespace grouptrack::protocol
