#pragma once

// Multi-mode position update engine and the CBT / Individual baselines.
//
// At each sampling instant the CH of every cluster counts the members that
// can hear it (the census C_s) and picks a mode:
//   C_s > C_t        multilateration: n_anchors random members take GPS
//                    fixes, everyone else solves WLSR/WLSRP from RSSI
//   1 < C_s <= C_t   cluster-based: one energized member fixes, all adopt it
//   C_s == 1         standalone: own GPS fix

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "grouptrack/channel.hpp"
#include "grouptrack/energy.hpp"
#include "grouptrack/multilat.hpp"
#include "grouptrack/protocol.hpp"
#include "grouptrack/rng.hpp"
#include "grouptrack/types.hpp"

namespace grouptrack::tracker {

enum class Mode { kMultilateration, kClusterBased, kStandalone };

enum class Algorithm { kMultiModeWlsr, kMultiModeWlsrp, kCbt, kIndividual };

std::string_view to_string(Mode mode);
/// CLI spelling: wlsr, wlsrp, cbt, individual.
std::string_view to_string(Algorithm algorithm);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct TrackerConfig {
  std::size_t cluster_threshold = 10;  // C_t
  std::size_t n_anchors = 6;           // A = N
  std::int64_t sampling_interval = 10;  // seconds
  double comm_range = 100.0;           // meters
  Algorithm algorithm = Algorithm::kMultiModeWlsrp;

  void validate() const;
};

Mode select_mode(std::size_t cluster_size, std::size_t threshold);

struct TimedEstimate {
  std::int64_t t = 0;
  multilat::PositionEstimate estimate;
};

struct NodeTrackState {
  NodeId node_id = 0;
  std::optional<TimedEstimate> last;
  // Time of the GPS fix the current estimate derives from; CBT ranks
  // neighbors by it.
  std::int64_t info_time = -1;
  energy::EnergyLedger ledger;
  channel::NoiseProfile noise;
};

/// Everything one update needs besides the node states. References are only
/// held for the duration of a step.
struct StepContext {
  std::int64_t t = 0;
  std::span<const Vec2> truth;  // truth[id]
  const channel::PathLossParams& path_loss;
  const energy::EnergyParams& energy;
  const TrackerConfig& config;
  Rng& selection_rng;  // anchor / refresher choices
  Rng& channel_rng;    // GPS and RSSI noise
};

struct MemberEstimate {
  NodeId node_id = 0;
  multilat::PositionEstimate estimate;
};

/// If any anchor is farther than 2 * comm_range from the estimate, returns
/// the position of the anchor with the smallest RSSI distance instead.
multilat::PositionEstimate filter_estimate(const multilat::PositionEstimate& estimate,
                                           std::span<const multilat::AnchorObservation> anchors,
                                           double comm_range);

/// `census` lists the members that heard the CH (CH included), ascending.
std::vector<MemberEstimate> multilateration_update(std::span<const NodeId> census,
                                                   std::span<NodeTrackState> states,
                                                   const StepContext& ctx);

std::vector<MemberEstimate> cluster_based_update(NodeId ch, std::span<const NodeId> census,
                                                 std::span<NodeTrackState> states,
                                                 const StepContext& ctx);

multilat::PositionEstimate standalone_update(NodeTrackState& state, const StepContext& ctx);

/// One round-robin refresher fixes; every other member adopts the freshest
/// estimate among itself and its in-range cluster mates (ties to the lower
/// id); members with no cluster mate in range use their own GPS.
std::vector<MemberEstimate> cbt_update(std::span<const NodeId> members, NodeId refresher,
                                       std::span<NodeTrackState> states,
                                       const StepContext& ctx);

multilat::PositionEstimate individual_update(NodeTrackState& state, const StepContext& ctx);

struct ClusterReport {
  NodeId ch_id = 0;
  std::size_t size = 0;
  std::size_t census = 0;
  Mode mode = Mode::kStandalone;
  std::size_t gps_fixes = 0;
};

struct InstantReport {
  std::int64_t t = 0;
  bool formation = false;
  std::vector<ClusterReport> clusters;
  std::size_t orphan_fixes = 0;  // standalone fixes by nodes that just left
  std::size_t total_fixes = 0;
};

/// Per-node seeded state machine advanced once per sampling instant.
class Tracker {
 public:
  Tracker(TrackerConfig config, channel::PathLossParams path_loss, energy::EnergyParams energy,
          double sigma_p, std::vector<channel::NoiseProfile> noise, std::uint64_t seed);

  InstantReport step(std::int64_t t, std::span<const Vec2> truth,
                     std::vector<protocol::ProtocolEvent>* events = nullptr);

  /// Adds E_l to every ledger.
  void finalize();

  const std::vector<NodeTrackState>& states() const { return states_; }
  const protocol::ClusterTable& clusters() const { return table_; }
  const TrackerConfig& config() const { return config_; }

 private:
  InstantReport step_individual(const StepContext& ctx);
  InstantReport step_formation(const StepContext& ctx, std::vector<protocol::ProtocolEvent>* events);
  InstantReport step_cooperative(const StepContext& ctx,
                                 std::vector<protocol::ProtocolEvent>* events);
  void hold(NodeId id, std::int64_t t);

  TrackerConfig config_;
  channel::PathLossParams path_loss_;
  energy::EnergyParams energy_;
  channel::RssiRanger ranger_;
  std::vector<NodeTrackState> states_;
  protocol::ClusterTable table_;
  bool formed_ = false;
  std::unordered_map<NodeId, std::size_t> round_robin_;
  Rng selection_rng_;
  Rng channel_rng_;
  Rng protocol_rng_;
};

/// GPS budget per mode: multilateration fixes exactly n_anchors, cluster-based
/// at most one, standalone exactly one; Individual fixes once per node.
/// Throws std::logic_error on violation.
void check_gps_budget(const InstantReport& report, const TrackerConfig& config,
                      std::size_t n_nodes);

}  // namespace grouptrack::tracker
