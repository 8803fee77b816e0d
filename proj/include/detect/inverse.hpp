#pragma once

#include <cstdint>
#include <vector>

#include "detect/matrix.hpp"
#include "detect/taxonomy.hpp"

namespace detect {

// One interaction-rate unknown: the unordered pair (lo, hi). Free entries are
// solved for; fixed entries keep `value`. Pairs not listed are fixed at zero.
struct BetaParam {
    std::size_t lo = 0;
    std::size_t hi = 0;
    bool free = true;
    double value = 0.0;  // read when !free
};

// One rotation-rate unknown: the directed channel from -> to. Free entries
// are solved subject to >= 0; fixed entries keep `value` (>= 0).
struct GammaParam {
    std::size_t from = 0;
    std::size_t to = 0;
    bool free = true;
    double value = 0.0;
};

// Find constant (B, Gamma) whose equilibrium is the prescribed target: the
// stationarity defect (1/M) F* (.) (B F*) + Gamma F* is linear in the free
// entries, so this is a constrained linear least-squares problem.
struct InverseProblem {
    std::size_t n = 0;
    std::vector<double> target;       // F*, sums to max_supply
    double max_supply = 0.0;
    std::vector<BetaParam> beta;
    std::vector<GammaParam> gamma;
    double regularization = -1.0;     // < 0: default 1e-6 * max_supply
};

void validate_inverse_problem(const InverseProblem& problem);

struct InverseSolution {
    Matrix interaction;     // antisymmetric by construction
    Matrix rotation;        // zero column sums by construction
    double residual_norm = 0.0;  // L2 of the equilibrium defect
    bool converged = false;      // residual_norm < 1e-8 * max_supply
    std::size_t active_clamps = 0;  // free gamma entries pinned at zero
};

InverseSolution solve_equilibrium_rates(const InverseProblem& problem);

// Stationarity defect of explicit matrices at the target; used to
// cross-check the solver's reported residual.
double equilibrium_defect_norm(const Matrix& interaction, const Matrix& rotation,
                               const std::vector<double>& target, double max_supply);

enum class Attractivity { Attracting, Neutral, Repelling };

struct VerificationReport {
    double initial_distance = 0.0;  // L1 distance to target / max_supply
    double final_distance = 0.0;
    std::vector<double> distances;  // one entry per simulated step
    bool diverged = false;          // forward run hit negative wealth
    std::int64_t diverged_step = -1;
    Attractivity attractivity = Attractivity::Neutral;
};

// Empirical attractivity check: forward-simulate from a perturbed start and
// watch the L1 distance to the target. Stationarity alone does not imply the
// target attracts, so this is reported separately from the residual.
VerificationReport verify_solution(const InverseSolution& solution,
                                   const InverseProblem& problem, double perturbation,
                                   std::int64_t horizon);

}  // namespace detect
