#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>

namespace minkob {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A C^2 scalar function on chart coordinates.  Gradient and plain second
// derivatives may be supplied analytically; otherwise second-order central
// differences with the given step are used.
class ScalarField {
public:
    using ValueFn = std::function<double(const Vec&)>;
    using GradFn = std::function<Vec(const Vec&)>;
    using HessFn = std::function<Mat(const Vec&)>;

    ScalarField() = default;
    ScalarField(std::string label, ValueFn value, GradFn grad = nullptr, HessFn hess = nullptr,
                double fd_step = 1e-4)
        : label_(std::move(label)), value_(std::move(value)), grad_(std::move(grad)),
          hess_(std::move(hess)), fd_step_(fd_step) {}

    const std::string& label() const { return label_; }
    double fd_step() const { return fd_step_; }
    bool has_analytic_derivatives() const { return grad_ != nullptr && hess_ != nullptr; }

    double value(const Vec& x) const { return value_(x); }

    Vec gradient(const Vec& x) const {
        if (grad_) return grad_(x);
        const auto n = x.size();
        Vec g(n);
        Vec xp = x, xm = x;
        for (Eigen::Index k = 0; k < n; ++k) {
            xp(k) += fd_step_;
            xm(k) -= fd_step_;
            g(k) = (value_(xp) - value_(xm)) / (2.0 * fd_step_);
            xp(k) = x(k);
            xm(k) = x(k);
        }
        return g;
    }

    // Plain coordinate second-derivative matrix (no Christoffel correction).
    Mat second_derivatives(const Vec& x) const {
        if (hess_) return hess_(x);
        const auto n = x.size();
        Mat h(n, n);
        const double s = fd_step_;
        const double f0 = value_(x);
        for (Eigen::Index i = 0; i < n; ++i) {
            Vec xp = x, xm = x;
            xp(i) += s;
            xm(i) -= s;
            h(i, i) = (value_(xp) - 2.0 * f0 + value_(xm)) / (s * s);
            for (Eigen::Index j = i + 1; j < n; ++j) {
                Vec xpp = x, xpm = x, xmp = x, xmm = x;
                xpp(i) += s; xpp(j) += s;
                xpm(i) += s; xpm(j) -= s;
                xmp(i) -= s; xmp(j) += s;
                xmm(i) -= s; xmm(j) -= s;
                h(i, j) = (value_(xpp) - value_(xpm) - value_(xmp) + value_(xmm)) / (4.0 * s * s);
                h(j, i) = h(i, j);
            }
        }
        return h;
    }

    // Composition with a coordinate map x = T(y); derivatives fall back to differences.
    ScalarField pullback(std::string label, std::function<Vec(const Vec&)> map) const {
        ValueFn v = value_;
        auto m = std::move(map);
        return ScalarField(std::move(label), [v, m](const Vec& y) { return v(m(y)); }, nullptr,
                           nullptr, fd_step_);
    }

    // Common model fields.
    static ScalarField squared_norm(int dim);             // |x|^2
    static ScalarField coordinate(int dim, int index);    // x_k
    static ScalarField quadratic_form(const Mat& q);      // x^T Q x
    static ScalarField shifted(const ScalarField& f, double c);  // f + c

private:
    std::string label_;
    ValueFn value_;
    GradFn grad_;
    HessFn hess_;
    double fd_step_ = 1e-4;
};

}  // namespace minkob
