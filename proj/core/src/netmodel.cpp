#include "mecopt/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mecopt/errors.hpp"
#include "rng.hpp"

namespace mecopt {
namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ValidationError(std::string(name) + " must be finite and > 0, got " +
                          std::to_string(value));
  }
}

}  // namespace

void SimulationParams::validate() const {
  require_positive(bandwidth_hz, "bandwidth_hz");
  require_positive(ap_tx_power_w, "ap_tx_power_w");
  require_positive(user_tx_power_w, "user_tx_power_w");
  require_positive(mec_cpu_cycles_per_s, "mec_cpu_cycles_per_s");
  require_positive(tx_data_bits, "tx_data_bits");
  require_positive(rx_data_bits, "rx_data_bits");
  require_positive(cycles_per_bit_coeff, "cycles_per_bit_coeff");
  require_positive(area_side_m, "area_side_m");
  if (!std::isfinite(noise_power_dbm)) throw ValidationError("noise_power_dbm must be finite");
  if (!(path_loss_exponent >= 2.0) || !std::isfinite(path_loss_exponent)) {
    throw ValidationError("path_loss_exponent must be >= 2, got " +
                          std::to_string(path_loss_exponent));
  }
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

LatencyMatrix::LatencyMatrix(std::size_t num_servers, std::size_t num_users,
                             std::vector<double> row_major)
    : servers_(num_servers), users_(num_users), entries_(std::move(row_major)) {
  if (servers_ == 0 || users_ == 0) throw ValidationError("latency matrix must be at least 1x1");
  if (entries_.size() != servers_ * users_) {
    throw ValidationError("latency matrix expects " + std::to_string(servers_ * users_) +
                          " entries, got " + std::to_string(entries_.size()));
  }
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (!std::isfinite(entries_[k]) || !(entries_[k] > 0.0)) {
      throw ValidationError("latency entry [" + std::to_string(k / users_) + "][" +
                            std::to_string(k % users_) + "] must be finite and > 0");
    }
  }
}

LatencyMatrix LatencyMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw ValidationError("latency matrix must be at least 1x1");
  }
  const std::size_t users = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * users);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != users) {
      throw ValidationError("latency matrix row " + std::to_string(i) + " has " +
                            std::to_string(rows[i].size()) + " entries, expected " +
                            std::to_string(users));
    }
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return LatencyMatrix(rows.size(), users, std::move(flat));
}

double LatencyMatrix::at(std::size_t server, std::size_t user) const {
  if (server >= servers_ || user >= users_) {
    throw std::out_of_range("latency matrix index (" + std::to_string(server) + ", " +
                            std::to_string(user) + ") out of range");
  }
  return (*this)(server, user);
}

std::vector<std::vector<double>> LatencyMatrix::rows() const {
  std::vector<std::vector<double>> out(servers_);
  for (std::size_t i = 0; i < servers_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

Instance generate_instance(const SimulationParams& params, std::size_t num_servers,
                           std::size_t num_users, std::uint64_t seed) {
  params.validate();
  if (num_servers == 0 || num_users == 0) {
    throw ContractViolation("generate_instance requires M >= 1 and N >= 1");
  }
  detail::Rng rng(seed);
  const double side = params.area_side_m;
  auto draw = [&] {
    Point p;
    p.x = rng.uniform(0.0, side);
    p.y = rng.uniform(0.0, side);
    return p;
  };

  Instance inst;
  inst.num_servers = num_servers;
  inst.num_users = num_users;
  inst.params = params;
  inst.rng_seed = seed;
  inst.server_positions.reserve(num_servers);
  for (std::size_t i = 0; i < num_servers; ++i) inst.server_positions.push_back(draw());

  for (std::size_t a = 0; a < num_users; ++a) {
    Point p = draw();
    // Bounded retries; latency_matrix() clamps any residual coincidence.
    for (int attempt = 0; attempt < 64; ++attempt) {
      bool clear = true;
      for (const Point& s : inst.server_positions) {
        if (distance(p, s) < kMinNodeSeparationM) {
          clear = false;
          break;
        }
      }
      if (clear) break;
      p = draw();
    }
    inst.user_positions.push_back(p);
  }

  inst.fading.assign(num_servers * num_users, 1.0);
  if (params.rayleigh_fading) {
    detail::Rng fading_rng(detail::mix_seed(seed, 1));
    // Floor keeps the gain strictly positive for the (2^-53) zero draw.
    for (double& f : inst.fading) f = std::max(fading_rng.exponential(), 1e-12);
  }
  return inst;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double channel_gain(double distance_m, double path_loss_exponent) {
  if (!(distance_m > 0.0)) {
    throw std::domain_error("channel_gain: distance must be > 0 (coincident nodes), got " +
                            std::to_string(distance_m));
  }
  return std::pow(distance_m, -path_loss_exponent);
}

double transmission_latency(double data_bits, double bandwidth_hz, double tx_power_w,
                            double gain, double noise_dbm) {
  if (!(data_bits > 0.0) || !(bandwidth_hz > 0.0) || !(tx_power_w > 0.0) || !(gain > 0.0)) {
    throw ContractViolation("transmission_latency requires positive inputs");
  }
  const double snr = tx_power_w * gain / dbm_to_watts(noise_dbm);
  const double seconds = data_bits / (bandwidth_hz * std::log2(1.0 + snr));
  if (!std::isfinite(seconds) || !(seconds > 0.0)) {
    throw ComputationError("transmission_latency is not finite (snr=" + std::to_string(snr) + ")");
  }
  return seconds;
}

double computation_latency(double cpu_cycles, double cycles_per_s) {
  if (!(cpu_cycles > 0.0) || !(cycles_per_s > 0.0)) {
    throw ContractViolation("computation_latency requires positive cycles and rate");
  }
  return cpu_cycles / cycles_per_s;
}

LatencyMatrix latency_matrix(const Instance& instance) {
  const SimulationParams& p = instance.params;
  p.validate();
  const std::size_t m = instance.num_servers;
  const std::size_t n = instance.num_users;
  if (instance.server_positions.size() != m || instance.user_positions.size() != n ||
      (!instance.fading.empty() && instance.fading.size() != m * n)) {
    throw ContractViolation("instance dimensions are inconsistent");
  }

  const double exec =
      computation_latency(p.cycles_per_bit_coeff * p.tx_data_bits, p.mec_cpu_cycles_per_s);
  std::vector<double> entries(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t a = 0; a < n; ++a) {
      const double d =
          std::max(distance(instance.server_positions[i], instance.user_positions[a]),
                   kMinNodeSeparationM);
      double h = channel_gain(d, p.path_loss_exponent);
      if (!instance.fading.empty()) h *= instance.fading[i * n + a];
      const double up = transmission_latency(p.tx_data_bits, p.bandwidth_hz, p.user_tx_power_w,
                                             h, p.noise_power_dbm);
      const double down = transmission_latency(p.rx_data_bits, p.bandwidth_hz, p.ap_tx_power_w,
                                               h, p.noise_power_dbm);
      entries[i * n + a] = up + exec + down;
    }
  }
  return LatencyMatrix(m, n, std::move(entries));
}

}  // namespace mecopt
