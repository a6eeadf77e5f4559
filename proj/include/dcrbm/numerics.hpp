#pragma once

#include <cmath>
#include <limits>

namespace dcrbm {

/// log(1 + e^x) without overflow for large |x|.
inline double softplus(double x) {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// Streaming log-sum-exp accumulator.
class LogSumExp {
public:
    void add(double x) {
        if (x == -std::numeric_limits<double>::infinity()) {
            return;
        }
        if (x <= max_) {
            sum_ += std::exp(x - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - x) + 1.0;
            max_ = x;
        }
    }

    void merge(const LogSumExp& other) {
        if (other.sum_ == 0.0) {
            return;
        }
        if (sum_ == 0.0) {
            *this = other;
            return;
        }
        if (other.max_ <= max_) {
            sum_ += other.sum_ * std::exp(other.max_ - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
            max_ = other.max_;
        }
    }

    double value() const {
        if (sum_ == 0.0) {
            return -std::numeric_limits<double>::infinity();
        }
        return max_ + std::log(sum_);
    }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

} // namespace dcrbm
