#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dcrbm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A {0,1}-valued configuration of a layer, stored as doubles so it can
/// enter matrix products directly.
using BinaryPattern = Eigen::VectorXd;

/// Largest min(m, n) for which exact enumeration is attempted by default.
inline constexpr int kDefaultEnumerationCap = 20;

struct ModelDims {
    std::size_t visible = 0;  // m
    std::size_t hidden = 0;   // n

    void validate() const;
    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// theta = {W, b, c}. W is n x m: W(i, j) couples hidden i and visible j.
struct RbmParams {
    ModelDims dims;
    Matrix weights;       // n x m
    Vector visible_bias;  // b, length m
    Vector hidden_bias;   // c, length n

    static RbmParams zeros(ModelDims dims);

    /// Throws DimensionError on shape mismatch, Error on non-finite entries.
    void validate() const;

    /// Bitwise equality of every entry.
    bool identical(const RbmParams& other) const;
};

/// A theta-shaped triple; the currency of all training updates.
struct GradientRecord {
    Matrix dW;  // n x m
    Vector db;  // m
    Vector dc;  // n

    static GradientRecord zeros(ModelDims dims);

    double norm() const;
    double min_coeff() const;
    double max_coeff() const;

    GradientRecord& operator+=(const GradientRecord& other);
    GradientRecord& operator-=(const GradientRecord& other);
    GradientRecord& operator*=(double s);
};

/// Clamps every component of an expectation record into [0, 1].
void clamp_unit(GradientRecord& record);

/// Offsets (mu, lambda) of the centered parameterization and their sliding
/// factors. With zero offsets the centered conditionals reduce to the plain
/// ones bit-for-bit.
struct CenteringState {
    Vector mu;      // length m, in [0, 1]
    Vector lambda;  // length n, in [0, 1]
    double nu_mu = 0.0;
    double nu_lambda = 0.0;

    static CenteringState zeros(ModelDims dims);
    void validate(ModelDims dims) const;
};

/// Uncentered parameters representing the same distribution as `params`
/// interpreted under `offsets`: b - W^T lambda, c - W mu.
RbmParams uncentered(const RbmParams& params, const CenteringState& offsets);

double energy(const RbmParams& params, const BinaryPattern& v, const BinaryPattern& h);

/// p(h_i = 1 | v) = sigmoid(sum_j W_ij (v_j - mu_j) + c_i).
Vector hidden_conditional(const RbmParams& params, const BinaryPattern& v);
Vector hidden_conditional(const RbmParams& params, const BinaryPattern& v, const CenteringState& offsets);

/// p(v_j = 1 | h) = sigmoid(sum_i W_ij (h_i - lambda_i) + b_j).
Vector visible_conditional(const RbmParams& params, const BinaryPattern& h);
Vector visible_conditional(const RbmParams& params, const BinaryPattern& h, const CenteringState& offsets);

/// g(theta, v) = log sum_h exp(-E(v, h)) = b.v + sum_i softplus(W_i v + c_i).
double g_value(const RbmParams& params, const BinaryPattern& v);

/// Gradient of g: dW = p(h|v) v^T, db = v, dc = p(h|v).
GradientRecord grad_g(const RbmParams& params, const BinaryPattern& v);

/// f(theta) = log Z, by enumerating 2^min(m, n) states.
double exact_log_partition(const RbmParams& params, int cap = kDefaultEnumerationCap);

double exact_log_likelihood(const RbmParams& params, const BinaryPattern& v, int cap = kDefaultEnumerationCap);

/// Gradient of f: model expectations E[h v^T], E[v], E[h] by enumeration.
GradientRecord exact_grad_f(const RbmParams& params, int cap = kDefaultEnumerationCap);

/// Mean exact log-likelihood over the columns of `testset` (m x N).
double atll_exact(const RbmParams& params, const Matrix& testset, int cap = kDefaultEnumerationCap);

/// Throws IntractableError when min(m, n) exceeds `cap`.
void require_enumerable(ModelDims dims, int cap);

bool is_binary(const Eigen::Ref<const Matrix>& values);

} // namespace dcrbm
