#include "mscd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mscd::kernels {

std::string family_name(KernelFamily family) {
    switch (family) {
    case KernelFamily::Zero: return "zero";
    case KernelFamily::Constant: return "constant";
    case KernelFamily::Pareto: return "pareto";
    case KernelFamily::Cutoff: return "cutoff";
    case KernelFamily::Tabulated: return "tabulated";
    }
    return "unknown";
}

RadialKernel RadialKernel::zero() {
    RadialKernel k;
    k.family_ = KernelFamily::Zero;
    return k;
}

RadialKernel RadialKernel::constant(double c, bool allow_negative) {
    if (!std::isfinite(c)) throw std::invalid_argument("constant kernel: non-finite amplitude");
    if (c < 0.0 && !allow_negative)
        throw std::invalid_argument("constant kernel: negative amplitude requires the "
                                    "de-alignment flag");
    RadialKernel k;
    k.family_ = KernelFamily::Constant;
    k.params_ = {c};
    k.max_abs_ = std::abs(c);
    return k;
}

RadialKernel RadialKernel::pareto(double c, double theta) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("pareto kernel: amplitude must be positive");
    if (theta < 0.0 || !std::isfinite(theta))
        throw std::invalid_argument("pareto kernel: exponent must be non-negative");
    RadialKernel k;
    k.family_ = KernelFamily::Pareto;
    k.params_ = {c, theta};
    k.max_abs_ = c;
    return k;
}

RadialKernel RadialKernel::cutoff(double c, double radius) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("cutoff kernel: amplitude must be positive");
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("cutoff kernel: radius must be positive");
    RadialKernel k;
    k.family_ = KernelFamily::Cutoff;
    k.params_ = {c, radius};
    k.max_abs_ = c;
    return k;
}

RadialKernel RadialKernel::tabulated(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() != values.size() || knots.size() < 2)
        throw std::invalid_argument("tabulated kernel: needs >= 2 matching (r, value) rows");
    if (knots.front() != 0.0)
        throw std::invalid_argument("tabulated kernel: first knot must be r = 0");
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!std::isfinite(knots[i]) || !std::isfinite(values[i]))
            throw std::invalid_argument("tabulated kernel: non-finite row");
        if (values[i] < 0.0)
            throw std::invalid_argument("tabulated kernel: negative value");
        if (i > 0 && knots[i] <= knots[i - 1])
            throw std::invalid_argument("tabulated kernel: knots must be strictly ascending");
    }
    RadialKernel k;
    k.family_ = KernelFamily::Tabulated;
    k.knots_ = std::move(knots);
    k.values_ = std::move(values);
    k.max_abs_ = k.values_.front();

    // Monotone piecewise-linear interpolation cannot overshoot, so checking
    // the knots plus refined midpoints is exhaustive.
    const int refine = 10;
    double prev = k(0.0);
    for (std::size_t seg = 0; seg + 1 < k.knots_.size(); ++seg) {
        for (int s = 1; s <= refine; ++s) {
            const double r = k.knots_[seg] +
                             (k.knots_[seg + 1] - k.knots_[seg]) * static_cast<double>(s) / refine;
            const double v = k(r);
            if (v > prev + 1e-14 * k.max_abs_)
                throw std::invalid_argument("tabulated kernel: values must be non-increasing");
            prev = v;
        }
    }
    return k;
}

double RadialKernel::operator()(double r) const {
    if (r < 0.0) throw std::invalid_argument("RadialKernel: negative radius");
    switch (family_) {
    case KernelFamily::Zero:
        return 0.0;
    case KernelFamily::Constant:
        return params_[0];
    case KernelFamily::Pareto:
        return params_[0] * std::pow(1.0 + r, -params_[1]);
    case KernelFamily::Cutoff:
        return r <= params_[1] ? params_[0] : 0.0;
    case KernelFamily::Tabulated: {
        if (r >= knots_.back()) return values_.back();
        auto hi = std::upper_bound(knots_.begin(), knots_.end(), r);
        const std::size_t j = static_cast<std::size_t>(hi - knots_.begin());
        const double t = (r - knots_[j - 1]) / (knots_[j] - knots_[j - 1]);
        return values_[j - 1] + t * (values_[j] - values_[j - 1]);
    }
    }
    return 0.0;
}

bool RadialKernel::is_zero() const { return family_ == KernelFamily::Zero; }

bool RadialKernel::negative_constant() const {
    return family_ == KernelFamily::Constant && params_[0] < 0.0;
}

RadialKernel load_tabulated_kernel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open kernel table: " + path);
    std::vector<double> knots, values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        double r, v;
        if (row >> r >> v) {
            knots.push_back(r);
            values.push_back(v);
        } else if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) {
            throw std::runtime_error("kernel table " + path + ": bad row at line " +
                                     std::to_string(line_no));
        }
    }
    return RadialKernel::tabulated(std::move(knots), std::move(values));
}

CommunicationArray::CommunicationArray(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("CommunicationArray: size must be >= 1");
    upper_.assign(static_cast<std::size_t>(n) * (n + 1) / 2, RadialKernel::zero());
}

std::size_t CommunicationArray::index(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_)
        throw std::out_of_range("CommunicationArray: index out of range");
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i) * n_ - static_cast<std::size_t>(i) * (i - 1) / 2 +
           static_cast<std::size_t>(j - i);
}

void CommunicationArray::set(int i, int j, RadialKernel kernel) {
    if (i != j && kernel.negative_constant())
        throw std::invalid_argument("CommunicationArray: negative kernels are only "
                                    "admissible on the diagonal");
    upper_[index(i, j)] = std::move(kernel);
}

const RadialKernel& CommunicationArray::kernel(int i, int j) const { return upper_[index(i, j)]; }

spectral::SymmetricArray CommunicationArray::array_at(double r) const {
    spectral::SymmetricArray a = spectral::SymmetricArray::zero(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j) a.set(i, j, kernel(i, j)(r));
    return a;
}

double CommunicationArray::max_kernel_value() const {
    double m = 0.0;
    for (const RadialKernel& k : upper_) m = std::max(m, k.max_abs());
    return m;
}

bool CommunicationArray::has_negative_diagonal() const {
    for (int i = 0; i < n_; ++i)
        if (kernel(i, i).negative_constant()) return true;
    return false;
}

std::vector<ProfilePoint> connectivity_profile(const CommunicationArray& phi,
                                               const spectral::WeightVector& w,
                                               const std::vector<double>& r_grid) {
    if (!std::is_sorted(r_grid.begin(), r_grid.end()))
        throw std::invalid_argument("connectivity_profile: r grid must be ascending");
    std::vector<ProfilePoint> profile;
    profile.reserve(r_grid.size());
    double scale = 0.0;
    for (double r : r_grid) {
        const auto lap = spectral::build_weighted_laplacian(phi.array_at(r), w);
        profile.push_back({r, lap.lambda2()});
        scale = std::max(scale, lap.lambda2());
    }
    for (std::size_t k = 1; k < profile.size(); ++k) {
        if (profile[k].lambda2 > profile[k - 1].lambda2 + 1e-9 * std::max(scale, 1.0))
            throw std::runtime_error("connectivity_profile: non-monotone profile, "
                                     "eigensolver inconsistency");
    }
    return profile;
}

std::vector<ProfilePoint> connectivity_profile_at_diameter(const CommunicationArray& phi,
                                                           const spectral::WeightVector& w,
                                                           const std::vector<double>& t_grid,
                                                           double d0, double delta_v0) {
    if (d0 < 0.0 || delta_v0 < 0.0)
        throw std::invalid_argument("connectivity_profile_at_diameter: negative envelope data");
    std::vector<double> r_grid;
    r_grid.reserve(t_grid.size());
    for (double t : t_grid) r_grid.push_back(d0 + delta_v0 * t);
    std::vector<ProfilePoint> profile = connectivity_profile(phi, w, r_grid);
    for (std::size_t k = 0; k < profile.size(); ++k) profile[k].r = t_grid[k];
    return profile;
}

TailFit estimate_tail_exponent(const std::vector<ProfilePoint>& profile, double r_min,
                               double r_max) {
    TailFit fit;
    std::vector<ProfilePoint> window;
    for (const ProfilePoint& p : profile)
        if (p.r >= r_min && p.r <= r_max) window.push_back(p);

    double peak = 0.0;
    for (const ProfilePoint& p : window) peak = std::max(peak, p.lambda2);
    for (const ProfilePoint& p : window) {
        if (p.lambda2 <= 1e-14 * std::max(peak, 1.0)) {
            fit.reason = "profile hits zero at r = " + std::to_string(p.r) +
                         "; no fat tail to certify";
            return fit;
        }
    }
    if (window.size() < 3) {
        fit.reason = "need at least 3 positive profile points in the fit window";
        return fit;
    }

    // OLS of log(lambda2) = log(c) - theta * log(1+r).
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double m = static_cast<double>(window.size());
    for (const ProfilePoint& p : window) {
        const double x = std::log1p(p.r);
        const double y = std::log(p.lambda2);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    if (denom <= 0.0) {
        fit.reason = "degenerate fit window (needs spread in r)";
        return fit;
    }
    fit.theta = -(m * sxy - sx * sy) / denom;
    fit.c = std::exp((sy + fit.theta * sx) / m);

    constexpr double kThetaMargin = 1e-3;
    constexpr double kFitSlack = 0.05;
    if (fit.theta >= 1.0 - kThetaMargin) {
        fit.reason = "fitted exponent theta >= 1; decay too fast for the fat-tail condition";
        return fit;
    }
    for (const ProfilePoint& p : window) {
        const double model = fit.c * std::pow(1.0 + p.r, -fit.theta);
        if (p.lambda2 < model * (1.0 - kFitSlack)) {
            fit.reason = "profile dips below the fitted power law at r = " + std::to_string(p.r);
            return fit;
        }
    }
    fit.pareto_certified = true;
    return fit;
}

} // namespace mscd::kernels
