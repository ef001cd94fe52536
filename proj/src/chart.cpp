#include "minkob/chart.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

namespace minkob {

namespace {

std::string point_str(const Vec& x) {
    std::ostringstream os;
    os << "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << ")";
    return os.str();
}

}  // namespace

bool Box::contains(const Vec& x, double margin) const {
    if (x.size() != dim()) return false;
    for (int i = 0; i < dim(); ++i) {
        if (x(i) < bounds[i][0] + margin || x(i) > bounds[i][1] - margin) return false;
    }
    return true;
}

Box Box::cube(int dim, double half_width) {
    Box b;
    b.bounds.assign(dim, {-half_width, half_width});
    return b;
}

Box Box::scaled(double factor) const {
    Box b = *this;
    for (auto& iv : b.bounds) {
        iv[0] /= factor;
        iv[1] /= factor;
    }
    return b;
}

double Christoffel::max_abs() const {
    double m = 0.0;
    for (const auto& g : gamma) m = std::max(m, g.cwiseAbs().maxCoeff());
    return m;
}

Vec Christoffel::contract(const Vec& v, const Vec& w) const {
    Vec out(dim());
    for (int i = 0; i < dim(); ++i) out(i) = v.dot(gamma[i] * w);
    return out;
}

MetricField MetricField::euclidean(int dim) {
    Mat id = Mat::Identity(dim, dim);
    return MetricField([id](const Vec&) { return id; }, nullptr, true);
}

Chart::Chart(int dim, Box box, MetricField metric, DerivativeScheme scheme, double fd_step)
    : dim_(dim), box_(std::move(box)), metric_(std::move(metric)), scheme_(scheme),
      fd_step_(fd_step) {
    if (dim_ < 2) throw ArgumentError("chart dimension must be at least 2");
    if (box_.dim() != dim_) throw ArgumentError("box dimension mismatch");
}

Mat Chart::metric_at(const Vec& x) const {
    if (!box_.contains(x)) throw DomainError("metric_at: point outside box " + point_str(x));
    Mat g = metric_(x);
    Mat sym = 0.5 * (g + g.transpose());
    Eigen::LLT<Mat> llt(sym);
    if (llt.info() != Eigen::Success) {
        throw MetricError("metric not positive definite at " + point_str(x));
    }
    return sym;
}

Mat Chart::metric_inverse_at(const Vec& x) const {
    Mat g = metric_at(x);
    return g.llt().solve(Mat::Identity(dim_, dim_));
}

Mat Chart::metric_partial(const Vec& x, int k) const {
    if (scheme_ == DerivativeScheme::Analytic && metric_.has_analytic_partials()) {
        return metric_.partial(x, k);
    }
    if (metric_.is_constant()) return Mat::Zero(dim_, dim_);
    Vec xp = x, xm = x;
    xp(k) += fd_step_;
    xm(k) -= fd_step_;
    if (!box_.contains(xp) || !box_.contains(xm)) {
        throw DomainError("metric_partial: stencil leaves box at " + point_str(x));
    }
    return (metric_(xp) - metric_(xm)) / (2.0 * fd_step_);
}

double Chart::norm(const Vec& x, const Vec& v) const {
    return std::sqrt(std::max(0.0, inner(x, v, v)));
}

Mat Chart::orthonormal_frame(const Vec& x) const {
    Mat g = metric_at(x);
    Eigen::LLT<Mat> llt(g);
    Mat l = llt.matrixL();
    // A = L^{-T} gives A^T g A = I.
    return l.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(dim_, dim_));
}

Christoffel Chart::christoffel_at(const Vec& x) const {
    Mat ginv = metric_inverse_at(x);
    std::vector<Mat> dg(dim_);
    for (int k = 0; k < dim_; ++k) dg[k] = metric_partial(x, k);

    Christoffel c;
    c.gamma.assign(dim_, Mat::Zero(dim_, dim_));
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            for (int k = j; k < dim_; ++k) {
                double s = 0.0;
                for (int l = 0; l < dim_; ++l) {
                    s += ginv(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
                }
                c.gamma[i](j, k) = 0.5 * s;
                c.gamma[i](k, j) = c.gamma[i](j, k);
            }
        }
    }
    return c;
}

HessianForm Chart::hessian_at(const ScalarField& rho, const Vec& x) const {
    Mat h = rho.second_derivatives(x);
    Vec grad = rho.gradient(x);
    Christoffel c = christoffel_at(x);
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            for (int k = 0; k < dim_; ++k) h(i, j) -= c(k, i, j) * grad(k);
        }
    }
    return HessianForm{0.5 * (h + h.transpose())};
}

namespace {

// Geodesic state with optional variational block d(x,v)/dv0.
struct GeoState {
    Vec x, v;
    Mat jx, jv;
};

}  // namespace

Vec Chart::exponential(const Vec& x0, const Vec& v0, int steps, Mat* d_endpoint_dv) const {
    if (metric_.is_constant()) {
        if (d_endpoint_dv) *d_endpoint_dv = Mat::Identity(dim_, dim_);
        Vec x = x0 + v0;
        if (!box_.contains(x)) throw DomainError("exponential: geodesic leaves box");
        return x;
    }

    const bool want_jac = d_endpoint_dv != nullptr;
    const double h = 1.0 / steps;
    const double dstep = fd_step_;

    GeoState s;
    s.x = x0;
    s.v = v0;
    if (want_jac) {
        s.jx = Mat::Zero(dim_, dim_);
        s.jv = Mat::Identity(dim_, dim_);
    }

    auto rhs = [&](const GeoState& st, GeoState& out) {
        Christoffel c = christoffel_at(st.x);
        out.x = st.v;
        out.v = -c.contract(st.v, st.v);
        if (want_jac) {
            out.jx = st.jv;
            out.jv = Mat::Zero(dim_, dim_);
            // d/dv0 of -Gamma(x)(v,v): metric-derivative term plus velocity term.
            for (int m = 0; m < dim_; ++m) {
                Vec xp = st.x, xm = st.x;
                xp(m) += dstep;
                xm(m) -= dstep;
                Christoffel cp = christoffel_at(xp);
                Christoffel cm = christoffel_at(xm);
                Vec dgamma_vv = (cp.contract(st.v, st.v) - cm.contract(st.v, st.v)) / (2.0 * dstep);
                out.jv.noalias() -= dgamma_vv * st.jx.row(m);
            }
            for (int col = 0; col < dim_; ++col) {
                out.jv.col(col).noalias() -= 2.0 * c.contract(st.v, st.jv.col(col));
            }
        }
    };

    GeoState k1, k2, k3, k4, tmp;
    for (int step = 0; step < steps; ++step) {
        rhs(s, k1);
        tmp = s;
        tmp.x = s.x + 0.5 * h * k1.x;
        tmp.v = s.v + 0.5 * h * k1.v;
        if (want_jac) {
            tmp.jx = s.jx + 0.5 * h * k1.jx;
            tmp.jv = s.jv + 0.5 * h * k1.jv;
        }
        rhs(tmp, k2);
        tmp.x = s.x + 0.5 * h * k2.x;
        tmp.v = s.v + 0.5 * h * k2.v;
        if (want_jac) {
            tmp.jx = s.jx + 0.5 * h * k2.jx;
            tmp.jv = s.jv + 0.5 * h * k2.jv;
        }
        rhs(tmp, k3);
        tmp.x = s.x + h * k3.x;
        tmp.v = s.v + h * k3.v;
        if (want_jac) {
            tmp.jx = s.jx + h * k3.jx;
            tmp.jv = s.jv + h * k3.jv;
        }
        rhs(tmp, k4);
        s.x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        s.v += (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
        if (want_jac) {
            s.jx += (h / 6.0) * (k1.jx + 2.0 * k2.jx + 2.0 * k3.jx + k4.jx);
            s.jv += (h / 6.0) * (k1.jv + 2.0 * k2.jv + 2.0 * k3.jv + k4.jv);
        }
        if (!box_.contains(s.x)) throw DomainError("exponential: geodesic leaves box");
    }
    if (want_jac) *d_endpoint_dv = s.jx;
    return s.x;
}

Chart normal_coordinates(const Chart& chart, const Vec& p, double radius) {
    const int n = chart.dim();
    if (!chart.box().contains(p)) throw DomainError("normal_coordinates: center outside box");
    Mat frame = chart.orthonormal_frame(p);

    if (chart.flat()) {
        // Translation composed with the orthonormal frame; metric is the identity.
        return Chart(n, Box::cube(n, radius), MetricField::euclidean(n),
                     DerivativeScheme::Analytic, chart.fd_step());
    }

    // Injectivity-radius heuristic: along probe geodesics the variational
    // determinant must stay positive (no conjugate point) and the geodesic must
    // stay in the box.
    for (int k = 0; k < 2 * n; ++k) {
        Vec dir = Vec::Zero(n);
        dir(k / 2) = (k % 2 == 0) ? 1.0 : -1.0;
        Mat j;
        try {
            chart.exponential(p, radius * (frame * dir), 256, &j);
        } catch (const DomainError&) {
            throw DomainError("normal_coordinates: radius too large, geodesic leaves box");
        }
        if (j.determinant() <= 0.0) {
            throw DomainError("normal_coordinates: conjugate point inside requested radius");
        }
    }

    Chart base = chart;
    Vec center = p;
    auto value = [base, center, frame](const Vec& y) {
        Mat j;
        Vec x = base.exponential(center, frame * y, 256, &j);
        Mat dexp = j * frame;
        return Mat(dexp.transpose() * base.metric_at(x) * dexp);
    };
    return Chart(n, Box::cube(n, radius), MetricField(value), DerivativeScheme::CentralDifference,
                 std::min(1e-4, radius * 1e-2));
}

namespace {

// Simpson-rule g-length of the straight chart segment [a, b].
double segment_length(const Chart& chart, const Vec& a, const Vec& b) {
    Vec d = b - a;
    double la = chart.norm(a, d);
    double lm = chart.norm(0.5 * (a + b), d);
    double lb = chart.norm(b, d);
    return (la + 4.0 * lm + lb) / 6.0;
}

double lattice_distance(const Chart& chart, const Vec& p, const Vec& q) {
    const int n = chart.dim();
    const int per_dim = n <= 2 ? 33 : (n == 3 ? 15 : 9);
    std::vector<double> lo(n), step(n);
    std::vector<int> sizes(n, per_dim);
    for (int i = 0; i < n; ++i) {
        lo[i] = chart.box().bounds[i][0];
        step[i] = (chart.box().bounds[i][1] - lo[i]) / (per_dim - 1);
    }
    auto flatten = [&](const std::vector<int>& idx) {
        long f = 0;
        for (int i = 0; i < n; ++i) f = f * per_dim + idx[i];
        return f;
    };
    auto coords = [&](long f) {
        std::vector<int> idx(n);
        for (int i = n - 1; i >= 0; --i) {
            idx[i] = static_cast<int>(f % per_dim);
            f /= per_dim;
        }
        return idx;
    };
    auto point_of = [&](const std::vector<int>& idx) {
        Vec x(n);
        for (int i = 0; i < n; ++i) x(i) = lo[i] + idx[i] * step[i];
        return x;
    };
    auto nearest = [&](const Vec& x) {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) {
            idx[i] = std::clamp(static_cast<int>(std::lround((x(i) - lo[i]) / step[i])), 0,
                                per_dim - 1);
        }
        return idx;
    };

    long total = 1;
    for (int i = 0; i < n; ++i) total *= per_dim;
    std::vector<double> dist(total, std::numeric_limits<double>::infinity());

    const long src = flatten(nearest(p));
    const long dst = flatten(nearest(q));
    using Entry = std::pair<double, long>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[src] = segment_length(chart, p, point_of(nearest(p)));
    heap.emplace(dist[src], src);

    std::vector<std::vector<int>> offsets;
    {
        std::vector<int> off(n, -1);
        while (true) {
            bool all_zero = std::all_of(off.begin(), off.end(), [](int o) { return o == 0; });
            if (!all_zero) offsets.push_back(off);
            int i = n - 1;
            while (i >= 0 && off[i] == 1) off[i--] = -1;
            if (i < 0) break;
            ++off[i];
        }
    }

    while (!heap.empty()) {
        auto [d, f] = heap.top();
        heap.pop();
        if (d > dist[f]) continue;
        if (f == dst) break;
        auto idx = coords(f);
        Vec x = point_of(idx);
        for (const auto& off : offsets) {
            std::vector<int> nidx = idx;
            bool ok = true;
            for (int i = 0; i < n; ++i) {
                nidx[i] += off[i];
                if (nidx[i] < 0 || nidx[i] >= per_dim) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            Vec y = point_of(nidx);
            double w = segment_length(chart, x, y);
            long nf = flatten(nidx);
            if (dist[f] + w < dist[nf]) {
                dist[nf] = dist[f] + w;
                heap.emplace(dist[nf], nf);
            }
        }
    }
    if (!std::isfinite(dist[dst])) {
        throw ConnectivityError("geodesic_distance: lattice fallback found no connecting path");
    }
    return dist[dst] + segment_length(chart, point_of(nearest(q)), q);
}

}  // namespace

double geodesic_distance(const Chart& chart, const Vec& p, const Vec& q) {
    if (!chart.box().contains(p) || !chart.box().contains(q)) {
        throw DomainError("geodesic_distance: endpoint outside box");
    }
    if ((p - q).norm() == 0.0) return 0.0;
    if (chart.flat()) {
        return chart.norm(p, q - p);
    }

    // Two-point shooting seeded by the straight chart segment.
    Vec v = q - p;
    try {
        for (int iter = 0; iter < 50; ++iter) {
            Mat j;
            Vec endpoint = chart.exponential(p, v, 128, &j);
            Vec r = endpoint - q;
            if (r.norm() < 1e-11) {
                return chart.norm(p, v);
            }
            Vec dv = j.fullPivLu().solve(r);
            double base = r.norm();
            double scale = 1.0;
            bool improved = false;
            for (int halve = 0; halve < 8; ++halve) {
                Vec vn = v - scale * dv;
                try {
                    Vec en = chart.exponential(p, vn, 128);
                    if ((en - q).norm() < base) {
                        v = vn;
                        improved = true;
                        break;
                    }
                } catch (const DomainError&) {
                }
                scale *= 0.5;
            }
            if (!improved) break;
        }
    } catch (const DomainError&) {
        // fall through to the lattice path
    }
    return lattice_distance(chart, p, q);
}

Chart rescale_metric(const Chart& chart, double t) {
    if (t <= 0.0) throw ArgumentError("rescale_metric: scale must be positive");
    if (chart.flat()) {
        Chart copy = chart;
        return Chart(chart.dim(), chart.box().scaled(t), chart.metric(),
                     chart.derivative_scheme(), chart.fd_step());
    }
    MetricField base = chart.metric();
    MetricField::ValueFn value = [base, t](const Vec& x) { return base(Vec(t * x)); };
    MetricField::PartialFn partial = nullptr;
    if (base.has_analytic_partials()) {
        partial = [base, t](const Vec& x, int k) { return Mat(t * base.partial(Vec(t * x), k)); };
    }
    return Chart(chart.dim(), chart.box().scaled(t), MetricField(value, partial),
                 chart.derivative_scheme(), chart.fd_step());
}

Chart affine_pullback(const Chart& chart, const Vec& p, const Mat& a, double s) {
    MetricField base = chart.metric();
    Vec center = p;
    Mat frame = a;
    MetricField::ValueFn value = [base, center, frame, s](const Vec& y) {
        Vec x = center + s * (frame * y);
        return Mat(s * s * frame.transpose() * base(x) * frame);
    };
    MetricField::PartialFn partial = nullptr;
    if (base.has_analytic_partials()) {
        partial = [base, center, frame, s](const Vec& y, int k) {
            Vec x = center + s * (frame * y);
            const int n = static_cast<int>(x.size());
            Mat d = Mat::Zero(n, n);
            for (int m = 0; m < n; ++m) d += s * frame(m, k) * base.partial(x, m);
            return Mat(s * s * frame.transpose() * d * frame);
        };
    }
    // Box: preimage of the chart box is not an interval product in general;
    // use the largest centered cube mapped inside it.
    double half = std::numeric_limits<double>::infinity();
    for (int i = 0; i < chart.dim(); ++i) {
        double room = std::min(p(i) - chart.box().bounds[i][0], chart.box().bounds[i][1] - p(i));
        double row = 0.0;
        for (int j = 0; j < chart.dim(); ++j) row += std::abs(s * a(i, j));
        if (row > 0.0) half = std::min(half, room / row);
    }
    return Chart(chart.dim(), Box::cube(chart.dim(), half), MetricField(value, partial),
                 chart.derivative_scheme(), chart.fd_step());
}

// ---------------------------------------------------------------------------
// Built-in metric kinds and the JSON schema.

Chart make_euclidean_chart(int dim, double half_width) {
    return Chart(dim, Box::cube(dim, half_width), MetricField::euclidean(dim),
                 DerivativeScheme::Analytic);
}

Chart make_conformal_chart(int dim, const Vec& direction, double half_width) {
    Vec d = direction;
    auto value = [d, dim](const Vec& x) {
        return Mat(std::exp(2.0 * d.dot(x)) * Mat::Identity(dim, dim));
    };
    auto partial = [d, dim](const Vec& x, int k) {
        return Mat(2.0 * d(k) * std::exp(2.0 * d.dot(x)) * Mat::Identity(dim, dim));
    };
    return Chart(dim, Box::cube(dim, half_width), MetricField(value, partial),
                 DerivativeScheme::Analytic);
}

Chart make_diagonal_chart(int dim, std::function<double(int, const Vec&)> entry,
                          std::function<double(int, const Vec&, int)> entry_partial,
                          double half_width) {
    auto value = [entry, dim](const Vec& x) {
        Mat g = Mat::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) g(i, i) = entry(i, x);
        return g;
    };
    MetricField::PartialFn partial = nullptr;
    if (entry_partial) {
        partial = [entry_partial, dim](const Vec& x, int k) {
            Mat g = Mat::Zero(dim, dim);
            for (int i = 0; i < dim; ++i) g(i, i) = entry_partial(i, x, k);
            return g;
        };
    }
    return Chart(dim, Box::cube(dim, half_width), MetricField(value, partial),
                 partial ? DerivativeScheme::Analytic : DerivativeScheme::CentralDifference);
}

Chart make_perturbed_euclidean_chart(int dim, double amplitude, const Vec& center, double width,
                                     double half_width) {
    Vec c = center;
    Mat pattern = Mat::Ones(dim, dim);
    auto bump = [c, width](const Vec& x) {
        return std::exp(-(x - c).squaredNorm() / (width * width));
    };
    auto value = [bump, pattern, amplitude, dim](const Vec& x) {
        return Mat(Mat::Identity(dim, dim) + amplitude * bump(x) * pattern);
    };
    auto partial = [bump, c, width, pattern, amplitude](const Vec& x, int k) {
        double db = -2.0 * (x(k) - c(k)) / (width * width) * bump(x);
        return Mat(amplitude * db * pattern);
    };
    return Chart(dim, Box::cube(dim, half_width), MetricField(value, partial),
                 DerivativeScheme::Analytic);
}

Chart make_constant_curvature_chart(int dim, double curvature, double half_width) {
    double kappa = curvature;
    auto value = [kappa, dim](const Vec& x) {
        double d = 1.0 + kappa * x.squaredNorm();
        return Mat(4.0 / (d * d) * Mat::Identity(dim, dim));
    };
    auto partial = [kappa, dim](const Vec& x, int k) {
        double d = 1.0 + kappa * x.squaredNorm();
        return Mat(-16.0 * kappa * x(k) / (d * d * d) * Mat::Identity(dim, dim));
    };
    return Chart(dim, Box::cube(dim, half_width), MetricField(value, partial),
                 DerivativeScheme::Analytic);
}

Chart chart_from_json(const nlohmann::json& doc) {
    const int dim = doc.at("dim").get<int>();
    Box box;
    for (const auto& iv : doc.at("box")) {
        box.bounds.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    }
    if (box.dim() != dim) throw ArgumentError("chart_from_json: box/dim mismatch");
    const auto& metric = doc.at("metric");
    const std::string kind = metric.at("kind").get<std::string>();
    const nlohmann::json params = metric.value("params", nlohmann::json::object());

    Chart proto = [&]() {
        if (kind == "euclidean") {
            double scale = params.value("scale", 1.0);
            Mat g = scale * Mat::Identity(dim, dim);
            return Chart(dim, box, MetricField([g](const Vec&) { return g; }, nullptr, true),
                         DerivativeScheme::Analytic);
        }
        if (kind == "conformal") {
            Vec d = Vec::Zero(dim);
            if (params.contains("direction")) {
                auto arr = params.at("direction");
                for (int i = 0; i < dim && i < static_cast<int>(arr.size()); ++i) {
                    d(i) = arr.at(i).get<double>();
                }
            } else {
                d(0) = 1.0;
            }
            return make_conformal_chart(dim, d);
        }
        if (kind == "diagonal") {
            struct Entry {
                double offset, scale;
                int var, power;
            };
            std::vector<Entry> entries;
            for (const auto& e : params.at("entries")) {
                entries.push_back({e.value("offset", 0.0), e.value("scale", 0.0),
                                   e.value("var", 0), e.value("power", 0)});
            }
            if (static_cast<int>(entries.size()) != dim) {
                throw ArgumentError("diagonal metric: entries must match dim");
            }
            auto entry = [entries](int i, const Vec& x) {
                const auto& e = entries[i];
                return e.offset + e.scale * std::pow(x(e.var), e.power);
            };
            auto entry_partial = [entries](int i, const Vec& x, int k) {
                const auto& e = entries[i];
                if (k != e.var || e.power == 0 || e.scale == 0.0) return 0.0;
                return e.scale * e.power * std::pow(x(e.var), e.power - 1);
            };
            return make_diagonal_chart(dim, entry, entry_partial);
        }
        if (kind == "perturbed_euclidean") {
            double amplitude = params.value("amplitude", 0.05);
            double width = params.value("width", 0.8);
            Vec center = Vec::Zero(dim);
            if (params.contains("center")) {
                auto arr = params.at("center");
                for (int i = 0; i < dim && i < static_cast<int>(arr.size()); ++i) {
                    center(i) = arr.at(i).get<double>();
                }
            }
            return make_perturbed_euclidean_chart(dim, amplitude, center, width);
        }
        if (kind == "constant_curvature") {
            double curvature = params.value("curvature", -1.0);
            return make_constant_curvature_chart(dim, curvature);
        }
        throw ArgumentError("chart_from_json: unknown metric kind '" + kind + "'");
    }();

    return Chart(dim, box, proto.metric(), proto.derivative_scheme(), proto.fd_step());
}

}  // namespace minkob
