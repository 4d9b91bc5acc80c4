#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace vmfcal {

// splitmix64 mix; used to derive independent substream seeds so that adding
// streams never perturbs earlier ones.
inline uint64_t substream_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// mt19937_64 with hand-rolled variate transforms. std::*_distribution output
// differs between standard libraries; these transforms are pinned so streams
// are reproducible across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1], safe under log()
    double uniform_pos() { return ((gen_() >> 11) + 1.0) * 0x1.0p-53; }

    // standard normal via Box-Muller (both values used)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = uniform_pos();
        const double v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        spare_ = r * std::sin(2.0 * M_PI * v);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * v);
    }

    Eigen::VectorXd gaussian_vector(int d) {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = normal();
        return v;
    }

    // uniform direction on S^{d-1}
    Eigen::VectorXd unit_vector(int d) {
        Eigen::VectorXd v;
        double n = 0.0;
        do {
            v = gaussian_vector(d);
            n = v.norm();
        } while (n < 1e-12);
        return v / n;
    }

    // Marsaglia-Tsang for shape >= 1, boosted for shape < 1
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform_pos();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    // Fisher-Yates over [0, n)
    template <typename Index>
    void shuffle(std::vector<Index>& idx) {
        for (size_t i = idx.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform() * i);
            std::swap(idx[i - 1], idx[j < i ? j : i - 1]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace vmfcal
