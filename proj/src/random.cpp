#include "coxsvi/random.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace coxsvi {

std::vector<Index> sample_without_replacement(Index n, Index k, Rng& rng) {
  if (k < 0 || n < 0 || k > n)
    throw std::invalid_argument("sample_without_replacement: need 0 <= k <= n");
  std::unordered_set<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(k) * 2);
  for (Index i = n - k; i < n; ++i) {
    std::uniform_int_distribution<Index> pick(0, i);
    const Index j = pick(rng);
    if (!chosen.insert(j).second) chosen.insert(i);
  }
  std::vector<Index> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace coxsvi
