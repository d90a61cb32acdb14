#include "grouptrack/tracker.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace grouptrack::tracker {
namespace {

using energy::Activity;
using multilat::Method;
using multilat::PositionEstimate;

double distance(const StepContext& ctx, NodeId a, NodeId b) {
  return (ctx.truth[a] - ctx.truth[b]).norm();
}

bool in_range(const StepContext& ctx, NodeId a, NodeId b) {
  return distance(ctx, a, b) <= ctx.config.comm_range;
}

void spend(NodeTrackState& state, Activity activity, const StepContext& ctx) {
  state.ledger = energy::charge(state.ledger, activity, ctx.energy);
}

Vec2 take_fix(NodeTrackState& state, const StepContext& ctx) {
  spend(state, Activity::kGpsFix, ctx);
  return channel::sample_gps_fix(ctx.truth[state.node_id], state.noise.sigma_a, ctx.channel_rng);
}

void record(NodeTrackState& state, std::int64_t t, const PositionEstimate& est,
            std::int64_t info_time) {
  state.last = TimedEstimate{t, est};
  state.info_time = info_time;
}

PositionEstimate held(const NodeTrackState& state) {
  if (!state.last)
    throw std::logic_error("node " + std::to_string(state.node_id) +
                           " has no estimate to hold");
  return {state.last->estimate.w_hat, Method::kHeld};
}

MemberEstimate hold_member(NodeTrackState& state, std::int64_t t) {
  const PositionEstimate est = held(state);
  record(state, t, est, state.info_time);
  return {state.node_id, est};
}

PositionEstimate nearest_anchor(std::span<const multilat::AnchorObservation> anchors) {
  const auto it = std::min_element(
      anchors.begin(), anchors.end(),
      [](const auto& a, const auto& b) { return a.d_tilde < b.d_tilde; });
  return {it->pos_tilde, Method::kNearestAnchor};
}

// Sender pays one tx; every listed node within range of the sender pays one rx.
void broadcast(NodeId sender, std::span<const NodeId> listeners, std::span<NodeTrackState> states,
               const StepContext& ctx) {
  spend(states[sender], Activity::kTransmit, ctx);
  for (NodeId id : listeners)
    if (id != sender && in_range(ctx, sender, id)) spend(states[id], Activity::kReceive, ctx);
}

std::uint64_t fixes_of(std::span<const NodeId> ids, std::span<const NodeTrackState> states) {
  std::uint64_t total = 0;
  for (NodeId id : ids) total += states[id].ledger.counts.gps;
  return total;
}

std::uint64_t fixes_of(std::span<const NodeTrackState> states) {
  std::uint64_t total = 0;
  for (const auto& s : states) total += s.ledger.counts.gps;
  return total;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kMultilateration: return "multilateration";
    case Mode::kClusterBased: return "cluster-based";
    case Mode::kStandalone: return "standalone";
  }
  return "?";
}

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kMultiModeWlsr: return "wlsr";
    case Algorithm::kMultiModeWlsrp: return "wlsrp";
    case Algorithm::kCbt: return "cbt";
    case Algorithm::kIndividual: return "individual";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kMultiModeWlsr, Algorithm::kMultiModeWlsrp, Algorithm::kCbt,
                      Algorithm::kIndividual})
    if (to_string(a) == name) return a;
  return std::nullopt;
}

void TrackerConfig::validate() const {
  if (cluster_threshold < 1) throw std::invalid_argument("cluster_threshold must be >= 1");
  if (n_anchors < 3) throw std::invalid_argument("n_anchors must be >= 3");
  if (n_anchors > cluster_threshold)
    throw std::invalid_argument("n_anchors must not exceed cluster_threshold");
  if (sampling_interval < 1) throw std::invalid_argument("sampling interval must be >= 1 s");
  if (!(comm_range > 0.0)) throw std::invalid_argument("comm_range must be positive");
}

Mode select_mode(std::size_t cluster_size, std::size_t threshold) {
  if (cluster_size > threshold) return Mode::kMultilateration;
  if (cluster_size > 1) return Mode::kClusterBased;
  return Mode::kStandalone;
}

PositionEstimate filter_estimate(const PositionEstimate& estimate,
                                 std::span<const multilat::AnchorObservation> anchors,
                                 double comm_range) {
  if (anchors.empty()) return estimate;
  const bool implausible = std::any_of(anchors.begin(), anchors.end(), [&](const auto& a) {
    return (estimate.w_hat - a.pos_tilde).norm() > 2.0 * comm_range;
  });
  return implausible ? nearest_anchor(anchors) : estimate;
}

std::vector<MemberEstimate> multilateration_update(std::span<const NodeId> census,
                                                   std::span<NodeTrackState> states,
                                                   const StepContext& ctx) {
  const std::size_t n_anchors = std::min(ctx.config.n_anchors, census.size());
  std::vector<NodeId> pool(census.begin(), census.end());
  for (std::size_t i = 0; i < n_anchors; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(ctx.selection_rng)]);
  }
  std::vector<NodeId> anchors(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_anchors));
  std::sort(anchors.begin(), anchors.end());

  std::vector<Vec2> fixes;
  fixes.reserve(anchors.size());
  for (NodeId a : anchors) {
    fixes.push_back(take_fix(states[a], ctx));
    broadcast(a, census, states, ctx);
  }

  const auto variant = ctx.config.algorithm == Algorithm::kMultiModeWlsr
                           ? multilat::Variant::kWlsr
                           : multilat::Variant::kWlsrp;
  std::vector<MemberEstimate> out;
  out.reserve(census.size());
  for (NodeId id : census) {
    auto& state = states[id];
    const auto anchor_it = std::lower_bound(anchors.begin(), anchors.end(), id);
    if (anchor_it != anchors.end() && *anchor_it == id) {
      const PositionEstimate est{fixes[static_cast<std::size_t>(anchor_it - anchors.begin())],
                                 Method::kGps};
      record(state, ctx.t, est, ctx.t);
      out.push_back({id, est});
      continue;
    }

    const channel::RssiRanger ranger{ctx.path_loss, state.noise.sigma_p};
    std::vector<multilat::AnchorObservation> heard;
    for (std::size_t k = 0; k < anchors.size(); ++k) {
      const double d = distance(ctx, id, anchors[k]);
      if (d > ctx.config.comm_range) continue;
      heard.push_back({fixes[k], ranger.estimate_distance(d, ctx.channel_rng),
                       states[anchors[k]].noise.sigma_a, state.noise.sigma_p});
    }
    if (heard.empty()) {
      out.push_back(hold_member(state, ctx.t));
      continue;
    }

    PositionEstimate est;
    if (heard.size() < 3) {
      est = nearest_anchor(heard);
    } else {
      try {
        std::optional<Vec2> origin;
        if (state.last) origin = state.last->estimate.w_hat;
        est = filter_estimate(multilat::estimate_position(heard, ctx.path_loss, variant, origin),
                              heard, ctx.config.comm_range);
      } catch (const multilat::DegenerateGeometry&) {
        est = nearest_anchor(heard);
      }
    }
    record(state, ctx.t, est, ctx.t);
    out.push_back({id, est});
  }
  return out;
}

std::vector<MemberEstimate> cluster_based_update(NodeId ch, std::span<const NodeId> census,
                                                 std::span<NodeTrackState> states,
                                                 const StepContext& ctx) {
  const double fix_cost = energy::gps_energy(ctx.energy);
  std::vector<NodeId> candidates;
  for (NodeId id : census)
    if (states[id].ledger.remaining(ctx.energy) >= fix_cost) candidates.push_back(id);

  std::vector<MemberEstimate> out;
  out.reserve(census.size());
  if (candidates.empty()) {
    for (NodeId id : census) out.push_back(hold_member(states[id], ctx.t));
    return out;
  }

  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  const NodeId source = candidates[pick(ctx.selection_rng)];
  const Vec2 fix = take_fix(states[source], ctx);
  broadcast(source, census, states, ctx);

  // Members the source cannot reach get the fix relayed by the CH.
  bool relayed = false;
  for (NodeId id : census) {
    if (id == source || in_range(ctx, source, id)) continue;
    spend(states[id], Activity::kReceive, ctx);
    relayed = true;
  }
  if (relayed) spend(states[ch], Activity::kTransmit, ctx);

  for (NodeId id : census) {
    const PositionEstimate est{fix, id == source ? Method::kGps : Method::kBorrowed};
    record(states[id], ctx.t, est, ctx.t);
    out.push_back({id, est});
  }
  return out;
}

PositionEstimate standalone_update(NodeTrackState& state, const StepContext& ctx) {
  const PositionEstimate est{take_fix(state, ctx), Method::kGps};
  record(state, ctx.t, est, ctx.t);
  return est;
}

PositionEstimate individual_update(NodeTrackState& state, const StepContext& ctx) {
  return standalone_update(state, ctx);
}

std::vector<MemberEstimate> cbt_update(std::span<const NodeId> members, NodeId refresher,
                                       std::span<NodeTrackState> states,
                                       const StepContext& ctx) {
  std::vector<MemberEstimate> out;
  out.reserve(members.size());
  out.push_back({refresher, standalone_update(states[refresher], ctx)});
  broadcast(refresher, members, states, ctx);

  struct Info {
    Vec2 position;
    std::int64_t time;
  };
  std::vector<Info> snapshot;
  snapshot.reserve(members.size());
  for (NodeId id : members) snapshot.push_back({held(states[id]).w_hat, states[id].info_time});

  for (std::size_t i = 0; i < members.size(); ++i) {
    const NodeId id = members[i];
    if (id == refresher) continue;
    std::size_t best = i;
    bool any_neighbor = false;
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (j == i || !in_range(ctx, id, members[j])) continue;
      any_neighbor = true;
      // members is sorted, so the first fresher-or-equal neighbor seen has
      // the lower id; self keeps ties.
      if (snapshot[j].time > snapshot[best].time) best = j;
    }
    if (!any_neighbor) {
      out.push_back({id, standalone_update(states[id], ctx)});
    } else if (best == i) {
      out.push_back(hold_member(states[id], ctx.t));
    } else {
      const PositionEstimate est{snapshot[best].position, Method::kBorrowed};
      record(states[id], ctx.t, est, snapshot[best].time);
      out.push_back({id, est});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const MemberEstimate& a, const MemberEstimate& b) { return a.node_id < b.node_id; });
  return out;
}

Tracker::Tracker(TrackerConfig config, channel::PathLossParams path_loss,
                 energy::EnergyParams energy, double sigma_p,
                 std::vector<channel::NoiseProfile> noise, std::uint64_t seed)
    : config_(config),
      path_loss_(path_loss),
      energy_(energy),
      ranger_{path_loss, sigma_p},
      table_(noise.size()),
      selection_rng_(make_rng(seed, Stream::kTracker)),
      channel_rng_(make_rng(seed, Stream::kChannel)),
      protocol_rng_(make_rng(seed, Stream::kProtocol)) {
  config_.validate();
  path_loss_.validate();
  energy_.validate();
  if (noise.empty()) throw std::invalid_argument("tracker needs at least one node");
  states_.resize(noise.size());
  for (std::size_t i = 0; i < noise.size(); ++i) {
    states_[i].node_id = static_cast<NodeId>(i);
    states_[i].ledger.node_id = static_cast<NodeId>(i);
    states_[i].noise = noise[i];
  }
}

InstantReport Tracker::step(std::int64_t t, std::span<const Vec2> truth,
                            std::vector<protocol::ProtocolEvent>* events) {
  if (truth.size() != states_.size())
    throw std::invalid_argument("tracker step: one true position per node is required");
  if (states_.front().last && states_.front().last->t >= t)
    throw std::invalid_argument("tracker step: time must increase");
  const StepContext ctx{t, truth, path_loss_, energy_, config_, selection_rng_, channel_rng_};
  const std::uint64_t before = fixes_of(states_);
  InstantReport report;
  if (config_.algorithm == Algorithm::kIndividual) {
    report = step_individual(ctx);
  } else if (!formed_) {
    report = step_formation(ctx, events);
  } else {
    report = step_cooperative(ctx, events);
  }
  report.t = t;
  report.total_fixes = static_cast<std::size_t>(fixes_of(states_) - before);
  return report;
}

InstantReport Tracker::step_individual(const StepContext& ctx) {
  for (auto& s : states_) individual_update(s, ctx);
  return {};
}

InstantReport Tracker::step_formation(const StepContext& ctx,
                                      std::vector<protocol::ProtocolEvent>* events) {
  for (auto& s : states_) standalone_update(s, ctx);
  table_.form(ctx.truth, config_.comm_range, ranger_, protocol_rng_, ctx.t, events);
  formed_ = true;
  InstantReport report;
  report.formation = true;
  for (const auto& c : table_.clusters())
    report.clusters.push_back({c.ch_id, c.size(), c.size(), Mode::kStandalone, c.size()});
  return report;
}

void Tracker::hold(NodeId id, std::int64_t t) { hold_member(states_[id], t); }

InstantReport Tracker::step_cooperative(const StepContext& ctx,
                                        std::vector<protocol::ProtocolEvent>* events) {
  const double range = config_.comm_range;
  table_.merge_in_range(ctx.truth, range, ctx.t, events);

  std::vector<bool> received(states_.size(), false);
  for (const auto& c : table_.clusters())
    for (NodeId id : c.members)
      received[id] = id == c.ch_id || in_range(ctx, id, c.ch_id);
  const std::vector<NodeId> leavers = table_.record_updates(received, ctx.t, events);

  InstantReport report;
  std::vector<NodeId> to_place = leavers;
  const std::vector<protocol::ClusterView> snapshot = table_.clusters();
  for (const auto& c : snapshot) {
    const std::uint64_t before = fixes_of(c.members, states_);
    ClusterReport r{c.ch_id, c.size(), 0, Mode::kStandalone, 0};
    std::vector<NodeId> census;
    for (NodeId id : c.members)
      if (received[id]) census.push_back(id);
    r.census = census.size();

    if (c.size() == 1) {
      standalone_update(states_[c.ch_id], ctx);
      to_place.push_back(c.ch_id);
    } else if (config_.algorithm == Algorithm::kCbt) {
      r.mode = Mode::kClusterBased;
      const NodeId refresher = c.members[round_robin_[c.ch_id]++ % c.size()];
      cbt_update(c.members, refresher, states_, ctx);
    } else {
      r.mode = select_mode(census.size(), config_.cluster_threshold);
      switch (r.mode) {
        case Mode::kMultilateration: multilateration_update(census, states_, ctx); break;
        case Mode::kClusterBased: cluster_based_update(c.ch_id, census, states_, ctx); break;
        case Mode::kStandalone: standalone_update(states_[c.ch_id], ctx); break;
      }
      for (NodeId id : c.members)
        if (!received[id]) hold(id, ctx.t);
    }
    r.gps_fixes = static_cast<std::size_t>(fixes_of(c.members, states_) - before);
    report.clusters.push_back(r);
  }

  for (NodeId id : leavers) standalone_update(states_[id], ctx);
  report.orphan_fixes = leavers.size();

  std::sort(to_place.begin(), to_place.end());
  for (NodeId id : to_place)
    table_.place_orphan(id, ctx.truth, range, ranger_, protocol_rng_, ctx.t, events);
  return report;
}

void Tracker::finalize() {
  for (auto& s : states_) s.ledger = energy::finalize(s.ledger, energy_);
}

void check_gps_budget(const InstantReport& report, const TrackerConfig& config,
                      std::size_t n_nodes) {
  auto fail = [&](const std::string& what) {
    throw std::logic_error("GPS budget violated at t=" + std::to_string(report.t) + ": " + what);
  };
  if (report.formation || config.algorithm == Algorithm::kIndividual) {
    if (report.total_fixes != n_nodes) fail("expected one fix per node");
    return;
  }
  std::size_t sum = report.orphan_fixes;
  for (const auto& c : report.clusters) {
    sum += c.gps_fixes;
    if (config.algorithm == Algorithm::kCbt && c.size > 1) {
      if (c.gps_fixes < 1 || c.gps_fixes > c.size) fail("CBT cluster fix count out of range");
      continue;
    }
    switch (c.mode) {
      case Mode::kMultilateration:
        if (c.gps_fixes != config.n_anchors) fail("multilateration must fix exactly n_anchors");
        break;
      case Mode::kClusterBased:
        if (c.gps_fixes > 1) fail("cluster-based mode fixed more than once");
        break;
      case Mode::kStandalone:
        if (c.gps_fixes != 1) fail("standalone mode must fix exactly once");
        break;
    }
  }
  if (sum != report.total_fixes) fail("per-cluster fixes do not add up");
}

}  // namespace grouptrack::tracker
