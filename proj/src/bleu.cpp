#include "lrmt/bleu.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "lrmt/error.hpp"

namespace lrmt::bleu {

Smoothing parse_smoothing(std::string_view name) {
  if (name == "none") return Smoothing::none;
  if (name == "add_one_for_n_ge_2") return Smoothing::add_one_for_n_ge_2;
  throw UsageError("unknown smoothing '" + std::string(name) + "' (expected none|add_one_for_n_ge_2)");
}

std::string_view to_string(Smoothing s) { return s == Smoothing::none ? "none" : "add_one_for_n_ge_2"; }

NgramCounts ngram_counts(const Tokens& tokens, std::size_t n) {
  if (n == 0) throw UsageError("n-gram order must be >= 1");
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

MatchCounts modified_precision(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, std::size_t n) {
  if (hyps.size() != refs.size())
    throw UsageError("hypothesis count " + std::to_string(hyps.size()) + " != reference count " + std::to_string(refs.size()));
  MatchCounts m;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    auto h = ngram_counts(hyps[s], n);
    auto r = ngram_counts(refs[s], n);
    for (const auto& [gram, count] : h) {
      m.total += count;
      if (auto it = r.find(gram); it != r.end()) m.clipped += std::min(count, it->second);
    }
  }
  return m;
}

double brevity_penalty(std::uint64_t hyp_len, std::uint64_t ref_len) {
  if (hyp_len == 0) return 0;
  if (hyp_len > ref_len) return 1;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
}

BleuReport corpus_bleu(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, std::size_t max_n,
                       Smoothing smoothing) {
  if (hyps.empty()) throw UsageError("BLEU needs a non-empty corpus");
  if (hyps.size() != refs.size())
    throw UsageError("hypothesis count " + std::to_string(hyps.size()) + " != reference count " + std::to_string(refs.size()));
  if (max_n < 1 || max_n > 4) throw UsageError("max_n must be in 1..4");

  BleuReport rep;
  rep.max_n = max_n;
  rep.smoothing = smoothing;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    rep.hyp_length += hyps[s].size();
    rep.ref_length += refs[s].size();
  }
  rep.brevity_penalty = brevity_penalty(rep.hyp_length, rep.ref_length);

  double log_sum = 0;
  std::size_t orders = 0;
  bool zero = false;
  for (std::size_t n = 1; n <= max_n; ++n) {
    auto m = modified_precision(hyps, refs, n);
    rep.counts[n - 1] = m;
    if (m.total == 0) continue;
    double num = static_cast<double>(m.clipped);
    double den = static_cast<double>(m.total);
    if (m.clipped == 0 && smoothing == Smoothing::add_one_for_n_ge_2 && n >= 2) {
      num += 1;
      den += 1;
    }
    double p = num / den;
    rep.precisions[n - 1] = p;
    ++orders;
    if (p == 0) {
      zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  if (orders == 0 || zero) {
    rep.score = 0;
  } else {
    rep.score = std::min(1.0, rep.brevity_penalty * std::exp(log_sum / static_cast<double>(orders)));
  }
  return rep;
}

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::istringstream in{std::string(text)};
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

std::string summary_line(const BleuReport& r) {
  char buf[256];
  const double ratio = r.ref_length == 0 ? 0.0 : static_cast<double>(r.hyp_length) / static_cast<double>(r.ref_length);
  std::snprintf(buf, sizeof buf, "BLEU4 = %.2f (%.1f/%.1f/%.1f/%.1f, BP=%.3f, ratio=%.3f)", 100.0 * r.score,
                100.0 * r.precisions[0], 100.0 * r.precisions[1], 100.0 * r.precisions[2], 100.0 * r.precisions[3],
                r.brevity_penalty, ratio);
  return buf;
}

std::string to_json(const BleuReport& r) {
  nlohmann::ordered_json j;
  j["score"] = r.score;
  j["precisions"] = r.precisions;
  nlohmann::ordered_json counts = nlohmann::ordered_json::array();
  for (const auto& c : r.counts) counts.push_back({{"clipped", c.clipped}, {"total", c.total}});
  j["counts"] = counts;
  j["brevity_penalty"] = r.brevity_penalty;
  j["hyp_length"] = r.hyp_length;
  j["ref_length"] = r.ref_length;
  j["max_n"] = r.max_n;
  j["smoothing"] = to_string(r.smoothing);
  return j.dump(2);
}

}  // namespace lrmt::bleu
