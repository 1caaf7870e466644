#include "lrmt/frequency.hpp"

#include <algorithm>

#include "lrmt/error.hpp"

namespace lrmt::analysis {

Direction parse_direction(std::string_view name) {
  if (name == "most") return Direction::most;
  if (name == "least") return Direction::least;
  throw UsageError("unknown direction '" + std::string(name) + "' (expected most|least)");
}

std::map<std::string, std::uint64_t> count_tokens(std::span<const std::string> tokens) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& t : tokens) ++counts[t];
  return counts;
}

FrequencyReport frequency_report(const std::map<std::string, std::uint64_t>& counts, std::size_t k,
                                 Direction direction) {
  if (k == 0) throw UsageError("frequency report needs k >= 1");
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  // counts is ordered by word, so a stable sort on count alone keeps the word tie-break.
  if (direction == Direction::most) {
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
  } else {
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
  }
  if (ranked.size() > k) ranked.resize(k);
  return {std::move(ranked), direction};
}

FrequencyReport frequency_report(std::span<const std::string> tokens, std::size_t k,
                                 Direction direction) {
  return frequency_report(count_tokens(tokens), k, direction);
}

void write_frequency_tsv(const FrequencyReport& report, std::ostream& out) {
  out << "rank\tword\tcount\n";
  std::size_t rank = 1;
  for (const auto& [word, count] : report.ranked) out << rank++ << '\t' << word << '\t' << count << '\n';
}

}  // namespace lrmt::analysis
