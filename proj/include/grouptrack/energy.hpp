#pragma once

// Per-node energy ledger: E_g per GPS fix, E_r per packet sent or received,
// plus a flat miscellaneous term added once when the run is finalized.

#include <cstdint>

#include "grouptrack/types.hpp"

namespace grouptrack::energy {

struct EnergyParams {
  double total_period = 43200.0;   // T, s
  double gps_power = 0.074;        // P_g, W
  double gps_fix_time = 5.0;       // T_g, s (hot start)
  double mcu_power = 0.0132;       // P_m, W
  double radio_power = 0.0132;     // P_r, W
  double packet_time = 0.00031;    // T_t, s (tabulated, rounded S/C)
  double packet_size = 80.0;       // S, bits
  double bit_rate = 256000.0;      // C, bits/s
  double standby_power = 1.2e-6;   // P_s, W
  double misc_energy = 54.0;       // E_l, J
  double misc_energy_scale = 1.0;  // multiplier on E_l, for shortened runs
  double battery_capacity = 3996.0;  // J

  void validate() const;
};

/// E_g = T_g (P_g + P_m).
double gps_energy(const EnergyParams& p);
/// E_r = T_t (P_r + P_m).
double radio_energy(const EnergyParams& p);

enum class Activity { kGpsFix, kTransmit, kReceive };

struct ActivityCounts {
  std::uint64_t gps = 0;
  std::uint64_t tx = 0;
  std::uint64_t rx = 0;
};

/// consumed is always recomputed from the counts, so replaying the activity
/// log reproduces it bit for bit.
struct EnergyLedger {
  NodeId node_id = 0;
  ActivityCounts counts;
  bool finalized = false;
  double consumed = 0.0;

  double remaining(const EnergyParams& p) const { return p.battery_capacity - consumed; }
  bool over_budget(const EnergyParams& p) const { return consumed > p.battery_capacity; }
};

double consumed_from_counts(const ActivityCounts& counts, bool include_misc,
                            const EnergyParams& p);

EnergyLedger charge(EnergyLedger ledger, Activity activity, const EnergyParams& p);

/// Adds E_l once. Idempotent.
EnergyLedger finalize(EnergyLedger ledger, const EnergyParams& p);

}  // namespace grouptrack::energy
