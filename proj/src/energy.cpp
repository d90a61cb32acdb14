#include "grouptrack/energy.hpp"

#include <stdexcept>

namespace grouptrack::energy {

void EnergyParams::validate() const {
  if (gps_power < 0.0 || mcu_power < 0.0 || radio_power < 0.0 || standby_power < 0.0)
    throw std::invalid_argument("energy: powers must be >= 0");
  if (gps_fix_time < 0.0 || packet_time < 0.0 || total_period < 0.0)
    throw std::invalid_argument("energy: durations must be >= 0");
  if (misc_energy < 0.0 || misc_energy_scale < 0.0)
    throw std::invalid_argument("energy: miscellaneous energy must be >= 0");
  if (!(bit_rate > 0.0) || packet_size < 0.0)
    throw std::invalid_argument("energy: bit_rate must be > 0 and packet_size >= 0");
  if (!(battery_capacity > 0.0)) throw std::invalid_argument("energy: battery_capacity must be > 0");
}

double gps_energy(const EnergyParams& p) { return p.gps_fix_time * (p.gps_power + p.mcu_power); }

double radio_energy(const EnergyParams& p) { return p.packet_time * (p.radio_power + p.mcu_power); }

double consumed_from_counts(const ActivityCounts& counts, bool include_misc,
                            const EnergyParams& p) {
  double total = static_cast<double>(counts.gps) * gps_energy(p) +
                 static_cast<double>(counts.tx + counts.rx) * radio_energy(p);
  if (include_misc) total += p.misc_energy * p.misc_energy_scale;
  return total;
}

EnergyLedger charge(EnergyLedger ledger, Activity activity, const EnergyParams& p) {
  switch (activity) {
    case Activity::kGpsFix: ++ledger.counts.gps; break;
    case Activity::kTransmit: ++ledger.counts.tx; break;
    case Activity::kReceive: ++ledger.counts.rx; break;
  }
  ledger.consumed = consumed_from_counts(ledger.counts, ledger.finalized, p);
  return ledger;
}

EnergyLedger finalize(EnergyLedger ledger, const EnergyParams& p) {
  ledger.finalized = true;
  ledger.consumed = consumed_from_counts(ledger.counts, true, p);
  return ledger;
}

}  // namespace grouptrack::energy
