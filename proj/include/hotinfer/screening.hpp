#pragma once

#include <string>
#include <vector>

#include "hotinfer/dataset.hpp"

namespace hotinfer {

struct ScreenSet {
  std::vector<int> indices;  // selected columns, ascending
  std::vector<int> ranking;  // full ranking, strongest first
  std::string method;
  int d = 0;
  std::vector<std::string> warnings;
};

/// Ranks columns by |x_k' y| descending (marginal correlation screening on
/// standardized data). Ties break toward the smaller index.
std::vector<int> sis_rank(const Dataset& data);

/// Ranks columns by the high-dimensional ordinary-least-squares projection
/// |X' (X X' + ridge_eps I)^-1 y| descending. With ridge_eps = 0 the Gram
/// system is solved by rank-revealing QR; it fails with SingularGram when y
/// is not in the range (the projection X' u is invariant to the null-space
/// component of u, so rank deficiency alone is not an obstruction).
std::vector<int> holp_rank(const Dataset& data, double ridge_eps = 0.0);

/// Guardrail bound n / 2 on the BIC size scan, clamped to [1, min(n - 2, p)]
/// so the prefix fits keep at least half the observations as residual
/// degrees of freedom.
int default_d_max(int n, int p);

/// Picks the screened-set size by BIC over nested prefixes of the ranking:
/// fits OLS on the first d ranked columns for d = 1..d_max and minimizes
/// n log(RSS/n) + d log(n), ties toward smaller d. Rank-deficient prefixes
/// are skipped with a warning.
ScreenSet bic_select(const Dataset& data, const std::vector<int>& ranking,
                     int d_max, const std::string& method);

}  // namespace hotinfer
