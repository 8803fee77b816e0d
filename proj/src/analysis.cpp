#include "detect/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace detect {

namespace {

void require_lambda(double lambda) {
    if (!(lambda > 0.0) || !(lambda < 1.0))
        throw Error(ErrorCode::LambdaOutOfRange,
                    "saving propensity must lie in (0, 1)");
}

double mean_of(const std::vector<double>& sample) {
    return std::accumulate(sample.begin(), sample.end(), 0.0) / double(sample.size());
}

}  // namespace

double effective_dimension(double lambda) {
    require_lambda(lambda);
    return (1.0 + 2.0 * lambda) / (1.0 - lambda);
}

double temperature(double lambda, double mean_wealth) {
    require_lambda(lambda);
    if (!(mean_wealth > 0.0))
        throw Error(ErrorCode::ValidationError, "mean wealth must be positive");
    return mean_wealth * (1.0 - lambda) / (1.0 + 2.0 * lambda);
}

GammaPrediction gamma_prediction(double lambda, double mean_wealth) {
    GammaPrediction p;
    p.lambda = lambda;
    p.shape = effective_dimension(lambda);
    p.temperature = temperature(lambda, mean_wealth);
    const double d_lambda = 2.0 * p.shape;
    p.skewness = 2.0 * std::sqrt(2.0) / std::sqrt(d_lambda);
    p.excess_kurtosis = 12.0 / d_lambda;
    return p;
}

ExponentialFit fit_exponential(const std::vector<double>& sample) {
    if (sample.size() < 100)
        throw Error(ErrorCode::SampleTooSmall,
                    "exponential fit needs at least 100 samples");
    ExponentialFit fit;
    fit.mean = mean_of(sample);

    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    const double n = double(sorted.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double cdf = 1.0 - std::exp(-sorted[i] / fit.mean);
        worst = std::max(worst, std::abs(cdf - double(i) / n));
        worst = std::max(worst, std::abs(double(i + 1) / n - cdf));
    }
    fit.ks_statistic = worst;
    return fit;
}

GammaFit fit_gamma(const std::vector<double>& sample) {
    if (sample.size() < 100)
        throw Error(ErrorCode::SampleTooSmall, "gamma fit needs at least 100 samples");
    const double mean = mean_of(sample);
    double ss = 0.0;
    for (double x : sample) ss += (x - mean) * (x - mean);
    const double variance = ss / double(sample.size() - 1);
    if (!(variance > 0.0))
        throw Error(ErrorCode::ZeroVariance, "gamma fit needs nonzero sample variance");
    return {mean * mean / variance, variance / mean};
}

ParetoFit fit_pareto_tail(const std::vector<double>& sample, double x_min) {
    if (!(x_min > 0.0))
        throw Error(ErrorCode::ValidationError, "pareto threshold must be positive");
    double log_sum = 0.0;
    std::size_t n_tail = 0;
    for (double x : sample) {
        if (x > x_min) {
            log_sum += std::log(x / x_min);
            ++n_tail;
        }
    }
    if (n_tail < 50)
        throw Error(ErrorCode::TailTooSmall,
                    "pareto fit needs at least 50 samples above the threshold");
    return {double(n_tail) / log_sum, x_min, n_tail};
}

double percentile(std::vector<double> sample, double q) {
    if (sample.empty())
        throw Error(ErrorCode::SampleTooSmall, "percentile of an empty sample");
    std::sort(sample.begin(), sample.end());
    const double pos = q * double(sample.size() - 1);
    const std::size_t lo = std::size_t(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sample.size() - 1);
    const double w = pos - double(lo);
    return sample[lo] * (1.0 - w) + sample[hi] * w;
}

double top_share(const std::vector<double>& sample, double q) {
    if (sample.empty() || !(q > 0.0) || !(q <= 1.0))
        throw Error(ErrorCode::ValidationError, "top share needs q in (0, 1]");
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t take =
        std::min(sorted.size(),
                 std::size_t(std::ceil(q * double(sorted.size()) - 1e-12)));
    double top = 0.0, total = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        total += sorted[i];
        if (i < take) top += sorted[i];
    }
    return total > 0.0 ? top / total : 0.0;
}

double gini(const std::vector<double>& sample) {
    if (sample.empty())
        throw Error(ErrorCode::SampleTooSmall, "gini of an empty sample");
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    const double n = double(sorted.size());
    double weighted = 0.0, total = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        weighted += double(i + 1) * sorted[i];
        total += sorted[i];
    }
    if (total <= 0.0) return 0.0;
    return (2.0 * weighted) / (n * total) - (n + 1.0) / n;
}

namespace {

// Wasserstein-1 distance between equal-size samples, normalized by the mean,
// so the convergence tolerance is dimensionless.
double normalized_w1(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    const double mean =
        (std::accumulate(a.begin(), a.end(), 0.0) +
         std::accumulate(b.begin(), b.end(), 0.0)) /
        double(a.size() + b.size());
    return mean > 0.0 ? acc / (double(a.size()) * mean) : 0.0;
}

}  // namespace

std::optional<std::size_t> equilibrium_detect(
    const std::vector<std::vector<double>>& snapshots, std::size_t window, double tol) {
    if (window == 0 || snapshots.size() < 2 * window)
        throw Error(ErrorCode::SampleTooSmall,
                    "equilibrium detection needs at least 2*window snapshots");
    for (std::size_t i = 1; i < snapshots.size(); ++i)
        if (snapshots[i].size() != snapshots[0].size())
            throw Error(ErrorCode::LengthMismatch, "snapshots differ in size");

    // pooling a window of snapshots on each side pushes the sampling noise of
    // the distance below useful tolerances
    auto pooled = [&](std::size_t begin, std::size_t end) {
        std::vector<double> out;
        out.reserve((end - begin) * snapshots[0].size());
        for (std::size_t k = begin; k < end; ++k)
            out.insert(out.end(), snapshots[k].begin(), snapshots[k].end());
        return out;
    };

    // d[i]: distance between the window ending at snapshot i and the one
    // starting there, defined for i in [window, count - window]
    const std::size_t count = snapshots.size();
    std::vector<double> dist;
    for (std::size_t i = window; i + window <= count; ++i)
        dist.push_back(normalized_w1(pooled(i - window, i), pooled(i, i + window)));

    for (std::size_t k = 0; k < dist.size(); ++k) {
        const std::size_t span = std::min(window, dist.size() - k);
        bool stable = true;
        for (std::size_t j = k; j < k + span; ++j) {
            if (dist[j] >= tol) {
                stable = false;
                break;
            }
        }
        if (stable) return k + window;  // snapshot index where stability begins
    }
    return std::nullopt;
}

Histogram histogram(const std::vector<double>& sample, std::size_t bins) {
    if (sample.empty() || bins == 0)
        throw Error(ErrorCode::SampleTooSmall, "histogram of an empty sample");
    const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
    double lo = *lo_it, hi = *hi_it;
    if (lo == hi) hi = lo + 1.0;

    Histogram h;
    h.edges.resize(bins + 1);
    const double width = (hi - lo) / double(bins);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + double(i) * width;
    h.counts.assign(bins, 0);
    for (double x : sample) {
        std::size_t bin = std::size_t((x - lo) / width);
        if (bin >= bins) bin = bins - 1;
        ++h.counts[bin];
    }
    h.density.resize(bins);
    for (std::size_t i = 0; i < bins; ++i)
        h.density[i] = double(h.counts[i]) / (double(sample.size()) * width);
    return h;
}

}  // namespace detect
