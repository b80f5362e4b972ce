#pragma once

// Physical MEC model: node placement, channel gains and per-link offloading
// latency L_ia = L^t_ia + L^e_ia + L^r_ia.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mecopt {

struct SimulationParams {
  double bandwidth_hz = 10e6;
  double ap_tx_power_w = 2.0;
  double user_tx_power_w = 0.5;
  double path_loss_exponent = 3.0;
  double noise_power_dbm = -75.0;
  double mec_cpu_cycles_per_s = 1e9;
  double tx_data_bits = 5e6;
  double rx_data_bits = 1e6;
  double cycles_per_bit_coeff = 330.0;
  double area_side_m = 1000.0;
  // Multiplies each path-loss gain by a seeded unit-mean exponential draw
  // (Rayleigh amplitude, squared).
  bool rayleigh_fading = false;

  // Throws ValidationError naming the first offending field.
  void validate() const;

  friend bool operator==(const SimulationParams&, const SimulationParams&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

// Dense M x N matrix of link latencies in seconds, row = server, column = user.
class LatencyMatrix {
 public:
  LatencyMatrix() = default;
  LatencyMatrix(std::size_t num_servers, std::size_t num_users, std::vector<double> row_major);
  // Every row must have the same length; entries finite and > 0.
  static LatencyMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t num_servers() const { return servers_; }
  std::size_t num_users() const { return users_; }

  double operator()(std::size_t server, std::size_t user) const {
    return entries_[server * users_ + user];
  }
  double at(std::size_t server, std::size_t user) const;

  std::span<const double> row(std::size_t server) const {
    return {entries_.data() + server * users_, users_};
  }
  const std::vector<double>& entries() const { return entries_; }
  std::vector<std::vector<double>> rows() const;

  friend bool operator==(const LatencyMatrix&, const LatencyMatrix&) = default;

 private:
  std::size_t servers_ = 0;
  std::size_t users_ = 0;
  std::vector<double> entries_;
};

struct Instance {
  std::size_t num_servers = 0;
  std::size_t num_users = 0;
  std::vector<Point> server_positions;
  std::vector<Point> user_positions;
  SimulationParams params;
  std::uint64_t rng_seed = 0;
  // Row-major M x N small-scale fading multipliers; all 1.0 unless
  // params.rayleigh_fading is set.
  std::vector<double> fading;

  friend bool operator==(const Instance&, const Instance&) = default;
};

inline constexpr double kMinNodeSeparationM = 1.0;

// Positions are i.i.d. uniform over [0, area_side_m]^2. Users landing within
// kMinNodeSeparationM of a server are redrawn.
Instance generate_instance(const SimulationParams& params, std::size_t num_servers,
                           std::size_t num_users, std::uint64_t seed);

double dbm_to_watts(double dbm);

// distance^(-exponent). Throws std::domain_error for distance <= 0.
double channel_gain(double distance_m, double path_loss_exponent);

// data / (B * log2(1 + P h / sigma^2)), noise given in dBm.
double transmission_latency(double data_bits, double bandwidth_hz, double tx_power_w,
                            double gain, double noise_dbm);

double computation_latency(double cpu_cycles, double cycles_per_s);

LatencyMatrix latency_matrix(const Instance& instance);

}  // namespace mecopt
