#pragma once

#include <vector>

#include <gmpxx.h>

namespace egren {

using RationalVector = std::vector<mpq_class>;
using RationalMatrix = std::vector<RationalVector>;  // row major

// maximize c.x subject to A x = b, x >= 0 (an empty c asks for feasibility only)
struct ExactLP {
    RationalMatrix A;
    RationalVector b;
    RationalVector c;
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

struct LPSolution {
    LPStatus status = LPStatus::Infeasible;
    RationalVector x;
    mpq_class objective;
    long pivots = 0;
};

// Two-phase tableau simplex with Bland's rule, exact over the rationals.
LPSolution solve_exact_lp(const ExactLP& lp);

int exact_rank(RationalMatrix m);

}  // namespace egren
