#include "mecopt/assignment.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mecopt/errors.hpp"

namespace mecopt {
namespace {

void check_dims(const Allocation& alloc, const LatencyMatrix& latency) {
  if (alloc.num_servers() != latency.num_servers() || alloc.num_users() != latency.num_users()) {
    throw ContractViolation("allocation is " + std::to_string(alloc.num_servers()) + "x" +
                            std::to_string(alloc.num_users()) + " but latency matrix is " +
                            std::to_string(latency.num_servers()) + "x" +
                            std::to_string(latency.num_users()));
  }
}

}  // namespace

Allocation::Allocation(std::size_t num_servers, std::vector<std::uint32_t> servers_of_user)
    : servers_(num_servers), assign_(std::move(servers_of_user)) {
  if (servers_ == 0) throw ValidationError("allocation needs at least one server");
  if (assign_.empty()) throw ValidationError("allocation needs at least one user");
  for (std::size_t a = 0; a < assign_.size(); ++a) {
    if (assign_[a] >= servers_) {
      throw ValidationError("user " + std::to_string(a + 1) + " assigned to server " +
                            std::to_string(assign_[a] + 1) + " but only " +
                            std::to_string(servers_) + " servers exist");
    }
  }
}

Allocation Allocation::all_on(std::size_t server, std::size_t num_servers, std::size_t num_users) {
  return Allocation(num_servers,
                    std::vector<std::uint32_t>(num_users, static_cast<std::uint32_t>(server)));
}

std::vector<std::vector<int>> Allocation::to_onehot() const {
  std::vector<std::vector<int>> x(servers_, std::vector<int>(assign_.size(), 0));
  for (std::size_t a = 0; a < assign_.size(); ++a) x[assign_[a]][a] = 1;
  return x;
}

std::string Allocation::to_string_one_based() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t a = 0; a < assign_.size(); ++a) {
    if (a) os << ", ";
    os << assign_[a] + 1;
  }
  os << ']';
  return os.str();
}

bool better(const Objective& a, const Objective& b) {
  if (a.max_latency_s != b.max_latency_s) return a.max_latency_s < b.max_latency_s;
  std::vector<double> la = a.per_server_loads;
  std::vector<double> lb = b.per_server_loads;
  std::sort(la.begin(), la.end(), std::greater<>());
  std::sort(lb.begin(), lb.end(), std::greater<>());
  return std::lexicographical_compare(la.begin(), la.end(), lb.begin(), lb.end());
}

bool same_rank(const Objective& a, const Objective& b) { return !better(a, b) && !better(b, a); }

double server_load(const Allocation& alloc, const LatencyMatrix& latency, std::size_t server) {
  check_dims(alloc, latency);
  if (server >= latency.num_servers()) {
    throw ContractViolation("server index " + std::to_string(server) + " out of range");
  }
  double load = 0.0;
  for (std::size_t a = 0; a < alloc.num_users(); ++a) {
    if (alloc.server_of(a) == server) load += latency(server, a);
  }
  return load;
}

Objective objective(const Allocation& alloc, const LatencyMatrix& latency) {
  check_dims(alloc, latency);
  Objective obj;
  obj.per_server_loads.assign(latency.num_servers(), 0.0);
  // Users summed in index order so every route to a load gives the same bits.
  for (std::size_t a = 0; a < alloc.num_users(); ++a) {
    const auto i = alloc.server_of(a);
    obj.per_server_loads[i] += latency(i, a);
  }
  obj.max_latency_s = *std::max_element(obj.per_server_loads.begin(), obj.per_server_loads.end());
  return obj;
}

bool is_feasible_onehot(const std::vector<std::vector<int>>& onehot) {
  if (onehot.empty()) return false;
  const std::size_t users = onehot.front().size();
  for (std::size_t i = 0; i < onehot.size(); ++i) {
    if (onehot[i].size() != users) {
      throw ValidationError("one-hot row " + std::to_string(i) + " has inconsistent length");
    }
    for (std::size_t a = 0; a < users; ++a) {
      if (onehot[i][a] != 0 && onehot[i][a] != 1) {
        throw ValidationError("one-hot entry [" + std::to_string(i) + "][" + std::to_string(a) +
                              "] = " + std::to_string(onehot[i][a]) + " is not binary");
      }
    }
  }
  if (users == 0) return false;
  for (std::size_t a = 0; a < users; ++a) {
    int column = 0;
    for (const auto& row : onehot) column += row[a];
    if (column != 1) return false;
  }
  return true;
}

Allocation allocation_from_onehot(const std::vector<std::vector<int>>& onehot) {
  if (!is_feasible_onehot(onehot)) {
    throw ValidationError("one-hot matrix violates the one-server-per-user constraint");
  }
  std::vector<std::uint32_t> assign(onehot.front().size());
  for (std::size_t i = 0; i < onehot.size(); ++i) {
    for (std::size_t a = 0; a < assign.size(); ++a) {
      if (onehot[i][a] == 1) assign[a] = static_cast<std::uint32_t>(i);
    }
  }
  return Allocation(onehot.size(), std::move(assign));
}

std::optional<std::uint64_t> index_space_size(std::size_t num_servers, std::size_t num_users) {
  std::uint64_t size = 1;
  for (std::size_t k = 0; k < num_users; ++k) {
    if (num_servers != 0 && size > std::numeric_limits<std::uint64_t>::max() / num_servers) {
      return std::nullopt;
    }
    size *= num_servers;
  }
  return size;
}

AllocationIndex encode_index(const Allocation& alloc) {
  if (!index_space_size(alloc.num_servers(), alloc.num_users())) {
    throw ContractViolation("allocation index space " + std::to_string(alloc.num_servers()) + "^" +
                            std::to_string(alloc.num_users()) + " exceeds 64 bits");
  }
  std::uint64_t s = 0;
  for (std::size_t a = 0; a < alloc.num_users(); ++a) {
    s = s * alloc.num_servers() + alloc.server_of(a);
  }
  return AllocationIndex{s};
}

Allocation decode_index(AllocationIndex index, std::size_t num_servers, std::size_t num_users) {
  const auto space = index_space_size(num_servers, num_users);
  if (num_servers == 0 || num_users == 0) {
    throw ValidationError("decode_index requires M >= 1 and N >= 1");
  }
  if (!space) throw ValidationError("allocation index space exceeds 64 bits");
  if (index.value >= *space) {
    throw ValidationError("allocation index " + std::to_string(index.value) + " outside [0, " +
                          std::to_string(*space) + ")");
  }
  std::vector<std::uint32_t> assign(num_users);
  std::uint64_t s = index.value;
  for (std::size_t k = num_users; k-- > 0;) {
    assign[k] = static_cast<std::uint32_t>(s % num_servers);
    s /= num_servers;
  }
  return Allocation(num_servers, std::move(assign));
}

double objective_lower_bound(const LatencyMatrix& latency) {
  double bound = 0.0;
  for (std::size_t a = 0; a < latency.num_users(); ++a) {
    double best = latency(0, a);
    for (std::size_t i = 1; i < latency.num_servers(); ++i) best = std::min(best, latency(i, a));
    bound = std::max(bound, best);
  }
  return bound;
}

}  // namespace mecopt
