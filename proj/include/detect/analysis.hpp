#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "detect/errors.hpp"

namespace detect {

// Gamma-equilibrium predictions for the global-saving exchange model.
struct GammaPrediction {
    double lambda = 0.0;
    double shape = 0.0;            // D_lambda / 2
    double temperature = 0.0;      // wealth units
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

// D_lambda/2 = (1 + 2 lambda) / (1 - lambda); > 1 for lambda in (0,1).
double effective_dimension(double lambda);

// T_lambda = <F> (1 - lambda) / (1 + 2 lambda); decreasing in lambda.
double temperature(double lambda, double mean_wealth);

GammaPrediction gamma_prediction(double lambda, double mean_wealth);

struct ExponentialFit {
    double mean = 0.0;
    double ks_statistic = 0.0;
};

// Maximum-likelihood exponential fit (the sample mean) plus the KS distance
// against the fitted law. Needs >= 100 samples.
ExponentialFit fit_exponential(const std::vector<double>& sample);

struct GammaFit {
    double shape = 0.0;
    double scale = 0.0;
};

// Method-of-moments Gamma fit: shape = mean^2/var, scale = var/mean.
GammaFit fit_gamma(const std::vector<double>& sample);

struct ParetoFit {
    double alpha = 0.0;
    double x_min = 0.0;
    std::size_t n_tail = 0;
};

// Hill estimator over the samples above x_min. Needs >= 50 tail samples.
ParetoFit fit_pareto_tail(const std::vector<double>& sample, double x_min);

double percentile(std::vector<double> sample, double q);

// Share of total wealth held by the top fraction q of holders.
double top_share(const std::vector<double>& sample, double q);

// Mean-absolute-difference Gini coefficient in [0, 1].
double gini(const std::vector<double>& sample);

// Earliest snapshot index from which the normalized Wasserstein-1 distance
// between consecutive snapshots stays below tol for a full window.
// Empty optional: not converged (a signal, not a failure).
std::optional<std::size_t> equilibrium_detect(
    const std::vector<std::vector<double>>& snapshots, std::size_t window, double tol);

struct Histogram {
    std::vector<double> edges;    // bins + 1 entries
    std::vector<std::size_t> counts;
    std::vector<double> density;
};

Histogram histogram(const std::vector<double>& sample, std::size_t bins);

}  // namespace detect
