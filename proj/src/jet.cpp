#include "pq/jet.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>

namespace pq {

int degree(const MultiIndex& idx) {
    int d = 0;
    for (int e : idx) d += e;
    return d;
}

double multi_factorial(const MultiIndex& idx) {
    double f = 1.0;
    for (int e : idx)
        for (int k = 2; k <= e; ++k) f *= k;
    return f;
}

namespace detail {
namespace {

using Exponents = std::array<std::uint8_t, kMaxDim>;

int pack(const Exponents& e, int dim, int order) {
    int code = 0;
    int stride = 1;
    for (int v = 0; v < dim; ++v) {
        code += e[v] * stride;
        stride *= order + 1;
    }
    return code;
}

void enumerate_degree(int dim, int var, int remaining, Exponents& current,
                      std::vector<Exponents>& out) {
    if (var == dim - 1) {
        current[var] = static_cast<std::uint8_t>(remaining);
        out.push_back(current);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        current[var] = static_cast<std::uint8_t>(e);
        enumerate_degree(dim, var + 1, remaining - e, current, out);
    }
}

std::unique_ptr<JetLayout> build_layout(int dim, int order, const JetLayout* lower) {
    auto layout = std::make_unique<JetLayout>();
    layout->dim = dim;
    layout->order = order;
    layout->lower = lower;

    Exponents current{};
    for (int d = 0; d <= order; ++d) enumerate_degree(dim, 0, d, current, layout->exponents);
    layout->count = static_cast<int>(layout->exponents.size());

    int stride = 1;
    for (int v = 0; v < dim; ++v) stride *= order + 1;
    layout->lookup.assign(stride, -1);
    layout->index_factorial.resize(layout->count);
    for (int i = 0; i < layout->count; ++i) {
        layout->lookup[pack(layout->exponents[i], dim, order)] = i;
        double f = 1.0;
        for (int v = 0; v < dim; ++v)
            for (int k = 2; k <= layout->exponents[i][v]; ++k) f *= k;
        layout->index_factorial[i] = f;
    }

    layout->pairs_by_target.resize(layout->count);
    for (int i = 0; i < layout->count; ++i) {
        for (int j = 0; j < layout->count; ++j) {
            Exponents sum{};
            int deg = 0;
            for (int v = 0; v < dim; ++v) {
                sum[v] = static_cast<std::uint8_t>(layout->exponents[i][v] + layout->exponents[j][v]);
                deg += sum[v];
            }
            if (deg > order) continue;
            int t = layout->lookup[pack(sum, dim, order)];
            layout->pairs_by_target[t].emplace_back(static_cast<std::uint16_t>(i),
                                                    static_cast<std::uint16_t>(j));
        }
    }

    if (lower) {
        layout->diff.resize(dim);
        for (int var = 0; var < dim; ++var) {
            layout->diff[var].resize(lower->count);
            for (int t = 0; t < lower->count; ++t) {
                Exponents e = lower->exponents[t];
                e[var] = static_cast<std::uint8_t>(e[var] + 1);
                layout->diff[var][t] = {layout->lookup[pack(e, dim, order)],
                                        static_cast<double>(e[var])};
            }
        }
    }
    return layout;
}

} // namespace

const JetLayout& JetLayout::get(int dim, int order) {
    if (dim < 1 || dim > kMaxDim)
        throw ShapeError("jet dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    if (order < 0 || order > kMaxOrder)
        throw ShapeError("jet order must be in [0, " + std::to_string(kMaxOrder) + "]");

    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> registry;

    std::lock_guard<std::mutex> lock(mutex);
    auto found = registry.find({dim, order});
    if (found != registry.end()) return *found->second;

    const JetLayout* lower = nullptr;
    for (int k = 0; k <= order; ++k) {
        auto it = registry.find({dim, k});
        if (it == registry.end())
            it = registry.emplace(std::make_pair(dim, k), build_layout(dim, k, lower)).first;
        lower = it->second.get();
    }
    return *registry.at({dim, order});
}

int JetLayout::position(const MultiIndex& idx) const {
    if (static_cast<int>(idx.size()) != dim) return -1;
    Exponents e{};
    int deg = 0;
    for (int v = 0; v < dim; ++v) {
        if (idx[v] < 0) return -1;
        e[v] = static_cast<std::uint8_t>(idx[v]);
        deg += idx[v];
    }
    if (deg > order) return -1;
    return lookup[pack(e, dim, order)];
}

int JetLayout::position(const std::array<std::uint8_t, kMaxDim>& e) const {
    return lookup[pack(e, dim, order)];
}

namespace {

// Arithmetic between mixed orders resolves to the lower order; the layouts
// share a prefix, so higher-order coefficient vectors are read as-is. Layouts
// are cached singletons, so the lower-order operand's layout is the common
// one without any registry lookup.
const JetLayout* common_layout(const Jet& a, const Jet& b) {
    if (a.dim() != b.dim())
        throw ShapeError("jet dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
    return a.order() <= b.order() ? a.layout() : b.layout();
}

} // namespace
} // namespace detail

Jet::Jet(const detail::JetLayout* layout) : layout_(layout), c_(layout->count) {}

Jet::Jet() : Jet(&detail::JetLayout::get(1, 0)) {}

Jet Jet::constant(int dim, int order, double value) {
    Jet j(&detail::JetLayout::get(dim, order));
    j.c_[0] = value;
    return j;
}

Jet Jet::constant_like(double v) const {
    Jet j(layout_);
    j.c_[0] = v;
    return j;
}

std::vector<Jet> Jet::lift_point(std::span<const double> x, int order) {
    if (order < 1) throw ParameterError("jet order for a lifted point must be at least 1");
    const int dim = static_cast<int>(x.size());
    const auto& layout = detail::JetLayout::get(dim, order);
    std::vector<Jet> jets;
    jets.reserve(x.size());
    for (int v = 0; v < dim; ++v) {
        if (!std::isfinite(x[v])) throw ParameterError("lifted coordinates must be finite");
        Jet j(&layout);
        j.c_[0] = x[v];
        MultiIndex seed(dim, 0);
        seed[v] = 1;
        j.c_[layout.position(seed)] = 1.0;
        jets.push_back(std::move(j));
    }
    return jets;
}

double Jet::coefficient(const MultiIndex& idx) const {
    const int pos = layout_->position(idx);
    if (pos < 0) throw ShapeError("multi-index degree exceeds jet order");
    return c_[pos];
}

double Jet::partial(const MultiIndex& idx) const {
    const int pos = layout_->position(idx);
    if (pos < 0) throw ShapeError("multi-index degree exceeds jet order");
    return c_[pos] * layout_->index_factorial[pos];
}

bool Jet::is_finite() const noexcept {
    for (int i = 0; i < c_.size(); ++i)
        if (!std::isfinite(c_[i])) return false;
    return true;
}

bool Jet::is_zero() const noexcept {
    for (int i = 0; i < c_.size(); ++i)
        if (c_[i] != 0.0) return false;
    return true;
}

Jet Jet::truncated(int new_order) const {
    if (new_order < 0 || new_order > order())
        throw ShapeError("truncation order must be in [0, order]");
    if (new_order == order()) return *this;
    const auto& layout = detail::JetLayout::get(dim(), new_order);
    Jet j(&layout);
    for (int i = 0; i < layout.count; ++i) j.c_[i] = c_[i];
    return j;
}

Jet Jet::derivative(int var) const {
    if (order() < 1) throw ShapeError("cannot differentiate an order-0 jet");
    if (var < 0 || var >= dim()) throw ShapeError("derivative variable out of range");
    const auto* lower = layout_->lower;
    Jet j(lower);
    const auto& table = layout_->diff[var];
    for (int t = 0; t < lower->count; ++t) j.c_[t] = c_[table[t].first] * table[t].second;
    return j;
}

Jet Jet::operator-() const {
    Jet j(layout_);
    for (int i = 0; i < layout_->count; ++i) j.c_[i] = -c_[i];
    return j;
}

Jet operator+(const Jet& a, const Jet& b) {
    const auto* layout = detail::common_layout(a, b);
    Jet r(layout);
    for (int i = 0; i < layout->count; ++i) r.c_[i] = a.c_[i] + b.c_[i];
    return r;
}

Jet operator-(const Jet& a, const Jet& b) {
    const auto* layout = detail::common_layout(a, b);
    Jet r(layout);
    for (int i = 0; i < layout->count; ++i) r.c_[i] = a.c_[i] - b.c_[i];
    return r;
}

Jet operator*(const Jet& a, const Jet& b) {
    const auto* layout = detail::common_layout(a, b);
    Jet r(layout);
    for (int t = 0; t < layout->count; ++t) {
        double s = 0.0;
        for (auto [i, j] : layout->pairs_by_target[t]) s += a.c_[i] * b.c_[j];
        r.c_[t] = s;
    }
    return r;
}

Jet operator/(const Jet& a, const Jet& b) {
    const auto* layout = detail::common_layout(a, b);
    if (std::abs(b.value()) <= kDegenerateThreshold)
        throw DegenerateError("jet division by a degenerate value", b.value());
    Jet q(layout);
    // Solve b*q = a coefficient by coefficient; graded order guarantees every
    // q[j] read below is already final.
    for (int t = 0; t < layout->count; ++t) {
        double s = a.c_[t];
        for (auto [i, j] : layout->pairs_by_target[t])
            if (i != 0) s -= b.c_[i] * q.c_[j];
        q.c_[t] = s / b.c_[0];
    }
    return q;
}

Jet operator+(const Jet& a, double s) {
    Jet r = a;
    r.c_[0] += s;
    return r;
}

Jet operator*(const Jet& a, double s) {
    Jet r(a.layout_);
    for (int i = 0; i < a.layout_->count; ++i) r.c_[i] = a.c_[i] * s;
    return r;
}

Jet operator/(const Jet& a, double s) {
    if (std::abs(s) <= kDegenerateThreshold)
        throw DegenerateError("jet division by a degenerate scalar", s);
    return a * (1.0 / s);
}

namespace {

Jet integer_pow(const Jet& a, long n) {
    // n >= 2, by squaring
    Jet base = a;
    Jet acc = a.constant_like(1.0);
    while (n > 0) {
        if (n & 1) acc = acc * base;
        n >>= 1;
        if (n > 0) base = base * base;
    }
    return acc;
}

// Horner evaluation of sum c_k * (a - a0)^k; (a - a0) has zero value, so the
// truncated composition is exact at the jet's order.
Jet compose_series(const Jet& a, std::span<const double> c) {
    const Jet shifted = a - a.value();
    Jet res = a.constant_like(c.back());
    for (int k = static_cast<int>(c.size()) - 2; k >= 0; --k) res = res * shifted + c[k];
    return res;
}

} // namespace

Jet pow(const Jet& a, double r) {
    const double rounded = std::round(r);
    if (std::abs(r - rounded) < 1e-12 && std::abs(rounded) <= 64.0) {
        const long n = std::lround(rounded);
        if (n == 0) return a.constant_like(1.0);
        if (n == 1) return a;
        Jet p = integer_pow(a, std::labs(n));
        if (n < 0) return a.constant_like(1.0) / p;
        return p;
    }
    if (a.value() <= kDegenerateThreshold)
        throw DegenerateError("fractional power of a non-positive jet value", a.value());
    const int k = a.order();
    std::vector<double> c(static_cast<std::size_t>(k) + 1);
    c[0] = std::pow(a.value(), r);
    for (int i = 1; i <= k; ++i) c[i] = c[i - 1] * (r - i + 1) / (i * a.value());
    return compose_series(a, c);
}

Jet exp(const Jet& a) {
    const int k = a.order();
    std::vector<double> c(static_cast<std::size_t>(k) + 1);
    c[0] = std::exp(a.value());
    for (int i = 1; i <= k; ++i) c[i] = c[i - 1] / i;
    return compose_series(a, c);
}

std::ostream& operator<<(std::ostream& os, const Jet& a) {
    os << "jet(dim " << a.dim() << ", order " << a.order() << ") [";
    for (int i = 0; i < a.coefficient_count(); ++i) {
        if (i) os << ", ";
        os << a.c_[i];
    }
    return os << "]";
}

} // namespace pq
