#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "ais/errors.hpp"
#include "ais/harness.hpp"
#include "ais/negative_selection.hpp"
#include "ais/rng.hpp"

namespace ais {

namespace {

using Bits = std::vector<std::uint64_t>;

std::size_t popcount(const Bits& b) {
  std::size_t n = 0;
  for (auto w : b) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

// Universe order; self sets are prefixes of it, so they nest.
std::vector<std::uint64_t> self_order(int L, bool clustered, Rng& rng) {
  const std::uint64_t n = std::uint64_t{1} << L;
  std::vector<std::uint64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::uint64_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[uniform_index(rng, i + 1)]);
  }
  if (clustered) {
    // Nearest patterns to a random centre first; the shuffle breaks ties.
    const std::uint64_t centre = rng() & (n - 1);
    std::stable_sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
      return std::popcount(a ^ centre) < std::popcount(b ^ centre);
    });
  }
  return order;
}

}  // namespace

ScalingTable scaling_probe(const ScaleSettings& s, std::uint64_t seed) {
  const int L = s.pattern_length;
  if (L < 1 || L > 14) throw ConfigError("scaling probe needs 1 <= L <= 14");
  if (s.r < 1 || s.r > L) throw ConfigError("scaling probe needs 1 <= r <= L");
  const std::size_t n = std::size_t{1} << L;
  const std::size_t words = (n + 63) / 64;

  // match_sets[v]: every pattern a receptor v recognises.
  std::vector<Bits> match_sets(n, Bits(words, 0));
  for (std::size_t v = 0; v < n; ++v) {
    const Pattern rv(v, L);
    for (std::size_t x = 0; x < n; ++x) {
      if (matches(rv, Pattern(x, L), s.r)) match_sets[v][x / 64] |= std::uint64_t{1} << (x % 64);
    }
  }

  Rng rng(derived_rng({seed, 0x5e1fULL})());
  const auto order = self_order(L, s.clustered_self, rng);
  const auto candidates = generate_detectors(s.max_candidates, L, seed);

  std::vector<std::size_t> sizes = s.self_sizes;
  std::sort(sizes.begin(), sizes.end());

  ScalingTable table;
  table.pattern_length = L;
  table.r = s.r;
  table.target = s.coverage_target;
  std::size_t prev = 0;
  for (std::size_t k : sizes) {
    if (k > n) throw ConfigError("self size exceeds the pattern universe");
    ScalingRow row;
    row.self_size = k;
    row.nonself_size = n - k;
    Bits self(words, 0);
    for (std::size_t i = 0; i < k; ++i) self[order[i] / 64] |= std::uint64_t{1} << (order[i] % 64);

    std::vector<char> tolerant(n, 0);
    Bits reachable(words, 0);
    for (std::size_t v = 0; v < n; ++v) {
      bool clean = true;
      for (std::size_t w = 0; w < words && clean; ++w) clean = (match_sets[v][w] & self[w]) == 0;
      if (!clean) continue;
      tolerant[v] = 1;
      for (std::size_t w = 0; w < words; ++w) reachable[w] |= match_sets[v][w];
    }
    if (row.nonself_size == 0) {
      row.saturated = true;
    } else {
      const double denom = static_cast<double>(row.nonself_size);
      row.coverage_ceiling = static_cast<double>(popcount(reachable)) / denom;
      Bits covered(words, 0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto v = static_cast<std::size_t>(candidates[i].receptor.bits());
        if (!tolerant[v]) continue;
        ++row.survivors;
        for (std::size_t w = 0; w < words; ++w) {
          count += static_cast<std::size_t>(std::popcount(match_sets[v][w] & ~covered[w]));
          covered[w] |= match_sets[v][w];
        }
        row.coverage = static_cast<double>(count) / denom;
        if (row.coverage >= s.coverage_target) {
          row.candidates_needed = i + 1;
          break;
        }
      }
      row.saturated = !row.candidates_needed;
    }
    // Saturated rows count as unbounded.
    const std::size_t needed =
        row.candidates_needed.value_or(std::numeric_limits<std::size_t>::max());
    if (needed < prev) table.nondecreasing = false;
    prev = needed;
    table.rows.push_back(row);
  }
  return table;
}

std::string format_scaling_table(const ScalingTable& t) {
  std::string out = fmt::format("L: {}\nr: {}\ncoverage_target: {}\n", t.pattern_length, t.r,
                                format_number(t.target));
  out += "self_size\tnonself_size\tcandidates\tsurvivors\tcoverage\tceiling\tstatus\n";
  for (const auto& row : t.rows) {
    out += fmt::format("{}\t{}\t{}\t{}\t{:.4f}\t{:.4f}\t{}\n", row.self_size, row.nonself_size,
                       row.candidates_needed ? std::to_string(*row.candidates_needed) : "-",
                       row.survivors, row.coverage, row.coverage_ceiling,
                       row.saturated ? "saturated" : "ok");
  }
  out += fmt::format("nondecreasing: {}\n", t.nondecreasing ? "yes" : "no");
  return out;
}

}  // namespace ais
