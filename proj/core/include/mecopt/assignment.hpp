#pragma once

// User-to-server allocations, the min-max objective, and the base-M integer
// index used to fingerprint allocations in trajectories.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mecopt/netmodel.hpp"

namespace mecopt {

// Dense user -> server map over M servers. Every user has exactly one server
// and every server index is < M; both hold by construction.
class Allocation {
 public:
  Allocation() = default;
  // Throws ValidationError when any index is >= num_servers or the
  // sequence is empty.
  Allocation(std::size_t num_servers, std::vector<std::uint32_t> servers_of_user);

  static Allocation all_on(std::size_t server, std::size_t num_servers, std::size_t num_users);

  std::size_t num_servers() const { return servers_; }
  std::size_t num_users() const { return assign_.size(); }
  std::uint32_t server_of(std::size_t user) const { return assign_[user]; }
  std::span<const std::uint32_t> servers_of_user() const { return assign_; }

  // Column a holds the one-hot vector of user a; X[i][a] = x_ia.
  std::vector<std::vector<int>> to_onehot() const;
  // "[3, 1, 2]" with 1-based server labels.
  std::string to_string_one_based() const;

  friend bool operator==(const Allocation&, const Allocation&) = default;

 private:
  std::size_t servers_ = 0;
  std::vector<std::uint32_t> assign_;
};

struct AllocationIndex {
  std::uint64_t value = 0;
  friend auto operator<=>(const AllocationIndex&, const AllocationIndex&) = default;
};

struct Objective {
  double max_latency_s = 0.0;
  std::vector<double> per_server_loads;
};

// Strict "a is better than b": lower max latency, then the descending-sorted
// load vector compared lexicographically.
bool better(const Objective& a, const Objective& b);
bool same_rank(const Objective& a, const Objective& b);

double server_load(const Allocation& alloc, const LatencyMatrix& latency, std::size_t server);
Objective objective(const Allocation& alloc, const LatencyMatrix& latency);

// True iff every column of the M x N binary matrix sums to 1. Throws
// ValidationError naming the cell for any entry outside {0, 1}.
bool is_feasible_onehot(const std::vector<std::vector<int>>& onehot);
// Inverse of Allocation::to_onehot for feasible matrices.
Allocation allocation_from_onehot(const std::vector<std::vector<int>>& onehot);

// M^N, or nullopt when it does not fit in 64 bits.
std::optional<std::uint64_t> index_space_size(std::size_t num_servers, std::size_t num_users);

// s = sum_u alloc[u] * M^(N-1-u): user 0 is the most significant digit.
AllocationIndex encode_index(const Allocation& alloc);
Allocation decode_index(AllocationIndex index, std::size_t num_servers, std::size_t num_users);

// max_a min_i L[i][a]; no allocation can beat it.
double objective_lower_bound(const LatencyMatrix& latency);

}  // namespace mecopt
