#include "minkob/scalar_field.hpp"

namespace minkob {

ScalarField ScalarField::squared_norm(int dim) {
    return ScalarField(
        "|x|^2", [](const Vec& x) { return x.squaredNorm(); },
        [](const Vec& x) { return Vec(2.0 * x); },
        [dim](const Vec&) { return Mat(2.0 * Mat::Identity(dim, dim)); });
}

ScalarField ScalarField::coordinate(int dim, int index) {
    return ScalarField(
        "x_" + std::to_string(index + 1), [index](const Vec& x) { return x(index); },
        [dim, index](const Vec&) {
            Vec g = Vec::Zero(dim);
            g(index) = 1.0;
            return g;
        },
        [dim](const Vec&) { return Mat(Mat::Zero(dim, dim)); });
}

ScalarField ScalarField::quadratic_form(const Mat& q) {
    Mat sym = 0.5 * (q + q.transpose());
    return ScalarField(
        "quadratic", [sym](const Vec& x) { return x.dot(sym * x); },
        [sym](const Vec& x) { return Vec(2.0 * sym * x); },
        [sym](const Vec&) { return Mat(2.0 * sym); });
}

ScalarField ScalarField::shifted(const ScalarField& f, double c) {
    ScalarField g = f;
    return ScalarField(
        f.label() + (c >= 0 ? "+" : "") + std::to_string(c),
        [g, c](const Vec& x) { return g.value(x) + c; }, [g](const Vec& x) { return g.gradient(x); },
        [g](const Vec& x) { return g.second_derivatives(x); }, f.fd_step());
}

}  // namespace minkob
