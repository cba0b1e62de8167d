#pragma once

#include <cstdint>

namespace hawkeye {

// Independent generator seed for sub-stream `stream` of a run seeded with
// `seed`, mixed through std::seed_seq.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace hawkeye
