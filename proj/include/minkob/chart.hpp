#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "minkob/errors.hpp"
#include "minkob/scalar_field.hpp"

#include "json.hpp"

namespace minkob {

// Product of coordinate intervals.
struct Box {
    std::vector<std::array<double, 2>> bounds;

    int dim() const { return static_cast<int>(bounds.size()); }
    bool contains(const Vec& x, double margin = 0.0) const;
    static Box cube(int dim, double half_width);
    Box scaled(double factor) const;  // bounds / factor
};

// Christoffel symbols at a point: gamma[i](j,k), symmetric in (j,k).
struct Christoffel {
    std::vector<Mat> gamma;

    double operator()(int i, int j, int k) const { return gamma[i](j, k); }
    int dim() const { return static_cast<int>(gamma.size()); }
    double max_abs() const;
    // Gamma^i_jk v^j w^k, symmetrized contraction.
    Vec contract(const Vec& v, const Vec& w) const;
};

// Levi-Civita Hessian of a scalar field at a point.
struct HessianForm {
    Mat values;

    double apply(const Vec& v, const Vec& w) const { return v.dot(values * w); }
};

// Metric tensor field x -> g(x) with optional analytic partial derivatives
// dg/dx_k.  A constant flag short-circuits normal coordinates and Christoffel.
class MetricField {
public:
    using ValueFn = std::function<Mat(const Vec&)>;
    using PartialFn = std::function<Mat(const Vec&, int)>;

    MetricField() = default;
    MetricField(ValueFn value, PartialFn partial = nullptr, bool constant = false)
        : value_(std::move(value)), partial_(std::move(partial)), constant_(constant) {}

    Mat operator()(const Vec& x) const { return value_(x); }
    bool has_analytic_partials() const { return partial_ != nullptr; }
    bool is_constant() const { return constant_; }
    Mat partial(const Vec& x, int k) const { return partial_(x, k); }

    static MetricField euclidean(int dim);

private:
    ValueFn value_;
    PartialFn partial_;
    bool constant_ = false;
};

enum class DerivativeScheme { Analytic, CentralDifference };

// Riemannian chart kernel: a coordinate box with a smooth metric field and
// the derived objects (inverse, Christoffel, Levi-Civita Hessian).
class Chart {
public:
    Chart() = default;
    Chart(int dim, Box box, MetricField metric,
          DerivativeScheme scheme = DerivativeScheme::CentralDifference, double fd_step = 1e-4);

    int dim() const { return dim_; }
    const Box& box() const { return box_; }
    const MetricField& metric() const { return metric_; }
    DerivativeScheme derivative_scheme() const { return scheme_; }
    double fd_step() const { return fd_step_; }
    bool flat() const { return metric_.is_constant(); }

    // g(x); throws DomainError outside the box and MetricError when not SPD.
    Mat metric_at(const Vec& x) const;
    Mat metric_inverse_at(const Vec& x) const;
    Mat metric_partial(const Vec& x, int k) const;

    double inner(const Vec& x, const Vec& v, const Vec& w) const { return v.dot(metric_at(x) * w); }
    double norm(const Vec& x, const Vec& v) const;

    // g-orthonormal basis columns at x (A with A^T g A = I).
    Mat orthonormal_frame(const Vec& x) const;

    Christoffel christoffel_at(const Vec& x) const;
    HessianForm hessian_at(const ScalarField& rho, const Vec& x) const;

    // Geodesic flow: returns the endpoint of the geodesic from x with initial
    // velocity v over unit time, `steps` RK4 steps.  Optionally accumulates the
    // derivative of the endpoint with respect to v (variational equation).
    Vec exponential(const Vec& x, const Vec& v, int steps = 256, Mat* d_endpoint_dv = nullptr) const;

private:
    int dim_ = 0;
    Box box_;
    MetricField metric_;
    DerivativeScheme scheme_ = DerivativeScheme::CentralDifference;
    double fd_step_ = 1e-4;
};

// Normal coordinates at p: returned chart is centered at 0 with g(0) = I and
// vanishing Christoffel symbols at the center (within integration tolerance).
Chart normal_coordinates(const Chart& chart, const Vec& p, double radius);

// Length infimum over C^1 paths, by two-point shooting with a lattice
// shortest-path fallback.
double geodesic_distance(const Chart& chart, const Vec& p, const Vec& q);

// h_t component field g_ij(t x) on the box scaled by 1/t.
Chart rescale_metric(const Chart& chart, double t);

// Affine pullback y -> p + s A y (used for frame-adapted coordinates).
Chart affine_pullback(const Chart& chart, const Vec& p, const Mat& a, double s = 1.0);

// Chart definitions from JSON:
// {"dim": n, "box": [[lo,hi],...], "metric": {"kind": ..., "params": {...}}}
Chart chart_from_json(const nlohmann::json& doc);

// Built-in metric constructors (the "kind" values of the JSON schema).
Chart make_euclidean_chart(int dim, double half_width = 2.0);
Chart make_conformal_chart(int dim, const Vec& direction, double half_width = 2.0);
Chart make_diagonal_chart(int dim, std::function<double(int, const Vec&)> entry,
                          std::function<double(int, const Vec&, int)> entry_partial,
                          double half_width = 2.0);
Chart make_perturbed_euclidean_chart(int dim, double amplitude, const Vec& center, double width,
                                     double half_width = 2.0);
Chart make_constant_curvature_chart(int dim, double curvature, double half_width = 0.9);

}  // namespace minkob
