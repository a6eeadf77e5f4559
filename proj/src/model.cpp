#include "dcrbm/model.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "dcrbm/errors.hpp"
#include "dcrbm/kernels.hpp"
#include "dcrbm/numerics.hpp"

namespace dcrbm {

namespace {

void check_length(const Eigen::Ref<const Vector>& x, std::size_t expected, const char* what) {
    if (static_cast<std::size_t>(x.size()) != expected) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) + ", got " +
                             std::to_string(x.size()));
    }
}

template <typename Derived>
bool bitwise_equal(const Eigen::DenseBase<Derived>& a, const Eigen::DenseBase<Derived>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        return false;
    }
    const auto& ea = a.derived().eval();
    const auto& eb = b.derived().eval();
    return std::memcmp(ea.data(), eb.data(), sizeof(double) * static_cast<std::size_t>(ea.size())) == 0;
}

Vector sigmoid_of(const Vector& x) { return x.unaryExpr([](double t) { return sigmoid(t); }); }

} // namespace

void ModelDims::validate() const {
    if (visible < 1 || hidden < 1) {
        throw DimensionError("model needs at least one visible and one hidden unit");
    }
}

RbmParams RbmParams::zeros(ModelDims dims) {
    dims.validate();
    const auto m = static_cast<Eigen::Index>(dims.visible);
    const auto n = static_cast<Eigen::Index>(dims.hidden);
    return RbmParams{dims, Matrix::Zero(n, m), Vector::Zero(m), Vector::Zero(n)};
}

void RbmParams::validate() const {
    dims.validate();
    if (static_cast<std::size_t>(weights.rows()) != dims.hidden ||
        static_cast<std::size_t>(weights.cols()) != dims.visible) {
        throw DimensionError("weight matrix must be hidden x visible");
    }
    check_length(visible_bias, dims.visible, "visible bias");
    check_length(hidden_bias, dims.hidden, "hidden bias");
    if (!weights.allFinite() || !visible_bias.allFinite() || !hidden_bias.allFinite()) {
        throw Error("parameters contain non-finite entries");
    }
}

bool RbmParams::identical(const RbmParams& other) const {
    return dims == other.dims && bitwise_equal(weights, other.weights) &&
           bitwise_equal(visible_bias, other.visible_bias) && bitwise_equal(hidden_bias, other.hidden_bias);
}

GradientRecord GradientRecord::zeros(ModelDims dims) {
    const auto m = static_cast<Eigen::Index>(dims.visible);
    const auto n = static_cast<Eigen::Index>(dims.hidden);
    return GradientRecord{Matrix::Zero(n, m), Vector::Zero(m), Vector::Zero(n)};
}

double GradientRecord::norm() const {
    return std::sqrt(dW.squaredNorm() + db.squaredNorm() + dc.squaredNorm());
}

double GradientRecord::min_coeff() const {
    return std::min({dW.minCoeff(), db.minCoeff(), dc.minCoeff()});
}

double GradientRecord::max_coeff() const {
    return std::max({dW.maxCoeff(), db.maxCoeff(), dc.maxCoeff()});
}

GradientRecord& GradientRecord::operator+=(const GradientRecord& other) {
    dW += other.dW;
    db += other.db;
    dc += other.dc;
    return *this;
}

GradientRecord& GradientRecord::operator-=(const GradientRecord& other) {
    dW -= other.dW;
    db -= other.db;
    dc -= other.dc;
    return *this;
}

GradientRecord& GradientRecord::operator*=(double s) {
    dW *= s;
    db *= s;
    dc *= s;
    return *this;
}

void clamp_unit(GradientRecord& record) {
    record.dW = record.dW.cwiseMax(0.0).cwiseMin(1.0);
    record.db = record.db.cwiseMax(0.0).cwiseMin(1.0);
    record.dc = record.dc.cwiseMax(0.0).cwiseMin(1.0);
}

CenteringState CenteringState::zeros(ModelDims dims) {
    return CenteringState{Vector::Zero(static_cast<Eigen::Index>(dims.visible)),
                          Vector::Zero(static_cast<Eigen::Index>(dims.hidden)), 0.0, 0.0};
}

void CenteringState::validate(ModelDims dims) const {
    check_length(mu, dims.visible, "visible offset mu");
    check_length(lambda, dims.hidden, "hidden offset lambda");
    if (!(nu_mu >= 0.0 && nu_mu <= 1.0) || !(nu_lambda >= 0.0 && nu_lambda <= 1.0)) {
        throw ConfigError("sliding factors must lie in [0, 1]");
    }
}

RbmParams uncentered(const RbmParams& params, const CenteringState& offsets) {
    offsets.validate(params.dims);
    RbmParams out = params;
    out.visible_bias = params.visible_bias - params.weights.transpose() * offsets.lambda;
    out.hidden_bias = params.hidden_bias - params.weights * offsets.mu;
    return out;
}

double energy(const RbmParams& params, const BinaryPattern& v, const BinaryPattern& h) {
    check_length(v, params.dims.visible, "visible pattern");
    check_length(h, params.dims.hidden, "hidden pattern");
    return -h.dot(params.weights * v) - params.visible_bias.dot(v) - params.hidden_bias.dot(h);
}

Vector hidden_conditional(const RbmParams& params, const BinaryPattern& v) {
    check_length(v, params.dims.visible, "visible pattern");
    return sigmoid_of(params.weights * v + params.hidden_bias);
}

Vector hidden_conditional(const RbmParams& params, const BinaryPattern& v, const CenteringState& offsets) {
    check_length(v, params.dims.visible, "visible pattern");
    check_length(offsets.mu, params.dims.visible, "visible offset mu");
    const Vector centered = v - offsets.mu;
    return sigmoid_of(params.weights * centered + params.hidden_bias);
}

Vector visible_conditional(const RbmParams& params, const BinaryPattern& h) {
    check_length(h, params.dims.hidden, "hidden pattern");
    return sigmoid_of(params.weights.transpose() * h + params.visible_bias);
}

Vector visible_conditional(const RbmParams& params, const BinaryPattern& h, const CenteringState& offsets) {
    check_length(h, params.dims.hidden, "hidden pattern");
    check_length(offsets.lambda, params.dims.hidden, "hidden offset lambda");
    const Vector centered = h - offsets.lambda;
    return sigmoid_of(params.weights.transpose() * centered + params.visible_bias);
}

double g_value(const RbmParams& params, const BinaryPattern& v) {
    check_length(v, params.dims.visible, "visible pattern");
    const Vector pre = params.weights * v + params.hidden_bias;
    double total = params.visible_bias.dot(v);
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
        total += softplus(pre[i]);
    }
    return total;
}

GradientRecord grad_g(const RbmParams& params, const BinaryPattern& v) {
    const Vector ph = hidden_conditional(params, v);
    return GradientRecord{ph * v.transpose(), v, ph};
}

void require_enumerable(ModelDims dims, int cap) {
    const std::size_t smaller = std::min(dims.visible, dims.hidden);
    if (cap < 0 || smaller > static_cast<std::size_t>(cap)) {
        throw IntractableError("exact enumeration needs min(visible, hidden) = " + std::to_string(smaller) +
                               " <= cap " + std::to_string(cap) + "; use AIS estimation instead");
    }
}

double exact_log_partition(const RbmParams& params, int cap) {
    params.validate();
    require_enumerable(params.dims, cap);
    return kernels::log_partition(params);
}

double exact_log_likelihood(const RbmParams& params, const BinaryPattern& v, int cap) {
    const double gv = g_value(params, v);
    return gv - exact_log_partition(params, cap);
}

GradientRecord exact_grad_f(const RbmParams& params, int cap) {
    params.validate();
    require_enumerable(params.dims, cap);
    return kernels::model_expectations(params);
}

double atll_exact(const RbmParams& params, const Matrix& testset, int cap) {
    if (testset.cols() == 0) {
        throw Error("ATLL needs a non-empty test set");
    }
    if (static_cast<std::size_t>(testset.rows()) != params.dims.visible) {
        throw DimensionError("test set rows must equal the visible dimension");
    }
    const double log_z = exact_log_partition(params, cap);
    const Vector g = kernels::g_values(params, testset);
    return g.mean() - log_z;
}

bool is_binary(const Eigen::Ref<const Matrix>& values) {
    return (values.array() == 0.0 || values.array() == 1.0).all();
}

} // namespace dcrbm
