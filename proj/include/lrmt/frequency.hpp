#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lrmt::analysis {

enum class Direction { most, least };
Direction parse_direction(std::string_view name);

struct FrequencyReport {
  std::vector<std::pair<std::string, std::uint64_t>> ranked;
  Direction direction = Direction::most;
};

std::map<std::string, std::uint64_t> count_tokens(std::span<const std::string> tokens);

// most: count descending, then word ascending.
// least: count ascending, then word ascending.
FrequencyReport frequency_report(const std::map<std::string, std::uint64_t>& counts, std::size_t k,
                                 Direction direction);
FrequencyReport frequency_report(std::span<const std::string> tokens, std::size_t k,
                                 Direction direction);

/// TSV with header `rank\tword\tcount`.
void write_frequency_tsv(const FrequencyReport& report, std::ostream& out);

}  // namespace lrmt::analysis
