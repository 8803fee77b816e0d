#include "detect/inverse.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "detect/macro.hpp"
#include "detect/supply.hpp"

namespace detect {

namespace {

constexpr double kConvergenceFactor = 1e-8;  // residual < 1e-8 * M

struct ParamColumns {
    // defect-space column of each free parameter, plus the constant part
    Eigen::MatrixXd columns;
    Eigen::VectorXd constant;
    std::vector<std::size_t> beta_index;   // free beta -> problem.beta index
    std::vector<std::size_t> gamma_index;  // free gamma -> problem.gamma index
};

ParamColumns assemble(const InverseProblem& problem) {
    const std::size_t n = problem.n;
    const auto& target = problem.target;
    const double m = problem.max_supply;

    std::size_t free_count = 0;
    for (const auto& b : problem.beta) free_count += b.free ? 1 : 0;
    for (const auto& g : problem.gamma) free_count += g.free ? 1 : 0;

    ParamColumns out;
    out.columns = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(free_count));
    out.constant = Eigen::VectorXd::Zero(Eigen::Index(n));

    std::size_t col = 0;
    for (std::size_t k = 0; k < problem.beta.size(); ++k) {
        const auto& b = problem.beta[k];
        const double c = target[b.lo] * target[b.hi] / m;
        if (b.free) {
            out.columns(Eigen::Index(b.lo), Eigen::Index(col)) = c;
            out.columns(Eigen::Index(b.hi), Eigen::Index(col)) = -c;
            out.beta_index.push_back(k);
            ++col;
        } else {
            out.constant(Eigen::Index(b.lo)) += c * b.value;
            out.constant(Eigen::Index(b.hi)) -= c * b.value;
        }
    }
    for (std::size_t k = 0; k < problem.gamma.size(); ++k) {
        const auto& g = problem.gamma[k];
        const double c = target[g.from];
        if (g.free) {
            out.columns(Eigen::Index(g.to), Eigen::Index(col)) = c;
            out.columns(Eigen::Index(g.from), Eigen::Index(col)) = -c;
            out.gamma_index.push_back(k);
            ++col;
        } else {
            out.constant(Eigen::Index(g.to)) += c * g.value;
            out.constant(Eigen::Index(g.from)) -= c * g.value;
        }
    }
    return out;
}

Eigen::VectorXd solve_reduced(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs,
                              double reg) {
    if (a.cols() == 0) return Eigen::VectorXd(0);
    if (reg > 0.0) {
        const Eigen::MatrixXd normal =
            a.transpose() * a +
            reg * reg * Eigen::MatrixXd::Identity(a.cols(), a.cols());
        return normal.ldlt().solve(a.transpose() * rhs);
    }
    // minimum-norm least-squares solution
    return a.completeOrthogonalDecomposition().solve(rhs);
}

}  // namespace

void validate_inverse_problem(const InverseProblem& problem) {
    if (problem.n < 2 || problem.target.size() != problem.n)
        throw Error(ErrorCode::ValidationError,
                    "inverse problem needs a target for every category", "invert.target");
    if (!(problem.max_supply > 0.0))
        throw Error(ErrorCode::NonPositiveSupply, "maximum supply must be positive");
    double total = 0.0;
    for (double f : problem.target) {
        if (f < 0.0)
            throw Error(ErrorCode::ValidationError, "target wealth must be nonnegative",
                        "invert.target");
        total += f;
    }
    if (std::abs(total - problem.max_supply) > 1e-9 * problem.max_supply)
        throw Error(ErrorCode::ValidationError,
                    "target wealth must sum to the maximum supply", "invert.target");

    std::vector<bool> seen_pair(problem.n * problem.n, false);
    for (const auto& b : problem.beta) {
        if (b.lo >= b.hi || b.hi >= problem.n)
            throw Error(ErrorCode::ValidationError, "invalid interaction-rate pair",
                        "invert.beta");
        if (seen_pair[b.lo * problem.n + b.hi])
            throw Error(ErrorCode::ValidationError,
                        "interaction-rate pair declared twice", "invert.beta");
        seen_pair[b.lo * problem.n + b.hi] = true;
        if (b.free && (problem.target[b.lo] <= 0.0 || problem.target[b.hi] <= 0.0))
            throw Error(ErrorCode::ValidationError,
                        "free interaction entries need strictly positive target wealth",
                        "invert.target");
    }
    std::vector<bool> seen_channel(problem.n * problem.n, false);
    for (const auto& g : problem.gamma) {
        if (g.from == g.to || g.from >= problem.n || g.to >= problem.n)
            throw Error(ErrorCode::ValidationError, "invalid rotation channel",
                        "invert.gamma");
        if (seen_channel[g.from * problem.n + g.to])
            throw Error(ErrorCode::ValidationError, "rotation channel declared twice",
                        "invert.gamma");
        seen_channel[g.from * problem.n + g.to] = true;
        if (!g.free && g.value < 0.0)
            throw Error(ErrorCode::NegativeRotationRate,
                        "fixed rotation rates must be nonnegative", "invert.gamma");
    }
}

InverseSolution solve_equilibrium_rates(const InverseProblem& problem) {
    validate_inverse_problem(problem);
    const double reg = problem.regularization < 0.0
                           ? 1e-6 * problem.max_supply
                           : problem.regularization;
    const ParamColumns parts = assemble(problem);
    const Eigen::VectorXd rhs = -parts.constant;

    const std::size_t total_free = std::size_t(parts.columns.cols());
    std::vector<bool> active(total_free, true);  // still being solved for
    Eigen::VectorXd solution = Eigen::VectorXd::Zero(Eigen::Index(total_free));

    // Active-set sweep: solve unconstrained, pin the most negative free gamma
    // at zero, repeat. The working set only shrinks, so this terminates.
    const std::size_t max_sweeps = total_free + 2;
    std::size_t sweeps = 0;
    std::size_t clamps = 0;
    for (;; ++sweeps) {
        if (sweeps > max_sweeps)
            throw Error(ErrorCode::MaxIterations, "active-set sweep failed to settle");

        std::vector<std::size_t> live;
        for (std::size_t k = 0; k < total_free; ++k)
            if (active[k]) live.push_back(k);

        Eigen::MatrixXd a(parts.columns.rows(), Eigen::Index(live.size()));
        for (std::size_t k = 0; k < live.size(); ++k)
            a.col(Eigen::Index(k)) = parts.columns.col(Eigen::Index(live[k]));
        const Eigen::VectorXd p = solve_reduced(a, rhs, reg);

        solution.setZero();
        for (std::size_t k = 0; k < live.size(); ++k)
            solution(Eigen::Index(live[k])) = p(Eigen::Index(k));

        // nonnegativity applies to the gamma block only
        std::size_t worst = total_free;
        double worst_value = 0.0;
        const std::size_t beta_count = parts.beta_index.size();
        for (std::size_t k = beta_count; k < total_free; ++k) {
            if (active[k] && solution(Eigen::Index(k)) < worst_value) {
                worst_value = solution(Eigen::Index(k));
                worst = k;
            }
        }
        if (worst == total_free) break;
        active[worst] = false;
        ++clamps;
    }

    // materialize the full matrices from fixed values plus the solved entries
    InverseSolution out;
    out.interaction = Matrix(problem.n);
    out.rotation = Matrix(problem.n);
    out.active_clamps = clamps;

    std::vector<double> beta_values(problem.beta.size());
    for (std::size_t k = 0; k < problem.beta.size(); ++k)
        beta_values[k] = problem.beta[k].free ? 0.0 : problem.beta[k].value;
    std::vector<double> gamma_values(problem.gamma.size());
    for (std::size_t k = 0; k < problem.gamma.size(); ++k)
        gamma_values[k] = problem.gamma[k].free ? 0.0 : problem.gamma[k].value;
    for (std::size_t k = 0; k < parts.beta_index.size(); ++k)
        beta_values[parts.beta_index[k]] = solution(Eigen::Index(k));
    for (std::size_t k = 0; k < parts.gamma_index.size(); ++k) {
        double v = solution(Eigen::Index(parts.beta_index.size() + k));
        if (v < 0.0) v = 0.0;  // pinned entries
        gamma_values[parts.gamma_index[k]] = v;
    }

    for (std::size_t k = 0; k < problem.beta.size(); ++k) {
        const auto& b = problem.beta[k];
        out.interaction(b.lo, b.hi) += beta_values[k];
        out.interaction(b.hi, b.lo) -= beta_values[k];
    }
    std::vector<ChannelRate> channels;
    for (std::size_t k = 0; k < problem.gamma.size(); ++k) {
        const auto& g = problem.gamma[k];
        channels.push_back({g.from, g.to, gamma_values[k]});
    }
    out.rotation = rotation_matrix(problem.n, channels);

    const Eigen::VectorXd defect =
        parts.columns * solution + parts.constant;
    out.residual_norm = defect.norm();
    const double tolerance = kConvergenceFactor * problem.max_supply;
    out.converged = out.residual_norm < tolerance;

    if (!out.converged) {
        // distinguish "no parameter can cancel the defect" from a merely
        // regularization-biased solve
        if (total_free == 0)
            throw Error(ErrorCode::InfeasibleStructure,
                        "no free parameters but the fixed system is not stationary at "
                        "the target");
        const Eigen::VectorXd gradient = parts.columns.transpose() * defect;
        bool can_improve = false;
        const std::size_t beta_count = parts.beta_index.size();
        for (std::size_t k = 0; k < total_free; ++k) {
            const double g = gradient(Eigen::Index(k));
            if (k < beta_count || active[k]) {
                if (std::abs(g) > 1e-12 * problem.max_supply) can_improve = true;
            } else if (-g > 1e-12 * problem.max_supply) {
                can_improve = true;  // pinned gamma wants to grow positive
            }
        }
        if (!can_improve)
            throw Error(ErrorCode::InfeasibleStructure,
                        "free parameters cannot cancel the remaining defect direction");
    }
    return out;
}

double equilibrium_defect_norm(const Matrix& interaction, const Matrix& rotation,
                               const std::vector<double>& target, double max_supply) {
    const std::size_t n = target.size();
    const std::vector<double> bf = interaction.apply(target);
    const std::vector<double> gf = rotation.apply(target);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = target[i] * bf[i] / max_supply + gf[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

VerificationReport verify_solution(const InverseSolution& solution,
                                   const InverseProblem& problem, double perturbation,
                                   std::int64_t horizon) {
    const std::size_t n = problem.n;
    std::vector<double> start(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        start[i] = problem.target[i] * (1.0 + perturbation * sign);
    }
    double total = 0.0;
    for (double v : start) total += v;
    for (double& v : start) v *= problem.max_supply / total;  // restore conservation

    auto l1_distance = [&](const std::vector<double>& f) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += std::abs(f[i] - problem.target[i]);
        return acc / problem.max_supply;
    };

    VerificationReport report;
    report.initial_distance = l1_distance(start);
    report.distances.reserve(std::size_t(horizon));

    SupplyModel supply = ConstantSupply{problem.max_supply};
    SupplyRealization realization(supply, 1.0, 0);
    MintBurnAllocation alloc;
    alloc.weights.assign(n, 0.0);
    alloc.weights[0] = 1.0;  // constant supply: delta is zero anyway

    MacroState state;
    state.wealth.values = start;
    state.wealth.step = 0;
    state.max_supply = problem.max_supply;

    for (std::int64_t k = 0; k < horizon; ++k) {
        try {
            state = step(state, solution.interaction, solution.rotation, realization,
                         alloc, 1.0);
        } catch (const Error& err) {
            if (err.code() != ErrorCode::NegativeWealth &&
                err.code() != ErrorCode::InsufficientWealthForBurn)
                throw;
            report.diverged = true;
            report.diverged_step = k + 1;
            break;
        }
        report.distances.push_back(l1_distance(state.wealth.values));
    }
    report.final_distance =
        report.distances.empty() ? report.initial_distance : report.distances.back();

    if (report.diverged || report.final_distance > 1.05 * report.initial_distance)
        report.attractivity = Attractivity::Repelling;
    else if (report.final_distance <= 0.5 * report.initial_distance)
        report.attractivity = Attractivity::Attracting;
    else
        report.attractivity = Attractivity::Neutral;
    return report;
}

}  // namespace detect
