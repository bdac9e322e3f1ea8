#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace egren {

using MultiIndex = std::vector<int>;

int order(const MultiIndex& alpha);
double factorial(const MultiIndex& alpha);
MultiIndex zero_index(int dim);
MultiIndex unit_index(int dim, int axis);
MultiIndex add(const MultiIndex& a, const MultiIndex& b);
bool dominated(const MultiIndex& gamma, const MultiIndex& alpha);  // gamma <= alpha componentwise
double binomial(const MultiIndex& alpha, const MultiIndex& gamma);

// All multi-indices in `dim` variables with |alpha| <= max_order, graded then
// reverse-lexicographic (x1 first), so index 0 is the zero index.
std::vector<MultiIndex> multi_indices_up_to(int dim, int max_order);

// All gamma <= alpha componentwise.
std::vector<MultiIndex> sub_indices(const MultiIndex& alpha);

// C(n, k) as an exact integer; throws on overflow.
std::uint64_t choose(std::uint64_t n, std::uint64_t k);

std::string to_string(const MultiIndex& alpha);

}  // namespace egren
