#pragma once

namespace mecopt::detail {
class Rng;
}  // namespace mecopt::detail
