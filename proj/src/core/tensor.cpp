#include "chatmine/tensor.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "chatmine/error.hpp"

namespace chatmine::nn {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape s, double fill_value) : shape(std::move(s)), data(shape_size(shape), fill_value) {}

Tensor Tensor::vector(std::vector<double> values) {
    Tensor t;
    t.shape = {values.size()};
    t.data = std::move(values);
    return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    CHATMINE_REQUIRE(values.size() == rows * cols, "matrix data size does not match shape");
    Tensor t;
    t.shape = {rows, cols};
    t.data = std::move(values);
    return t;
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

// ---------------------------------------------------------------------------

double Rng::uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t Rng::index(std::size_t n) {
    CHATMINE_REQUIRE(n > 0, "Rng::index on empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = gen_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

double Rng::normal() {
    // Box-Muller; one value per call keeps the stream simple to reason about.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// ---------------------------------------------------------------------------

Parameter& ParameterSet::add(const std::string& name, Shape shape) {
    if (find(name)) throw ContractViolation("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value = Tensor(shape);
    p->grad = Tensor(std::move(shape));
    params_.push_back(std::move(p));
    return *params_.back();
}

const Parameter* ParameterSet::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

Parameter& ParameterSet::get(const std::string& name) {
    return const_cast<Parameter&>(static_cast<const ParameterSet&>(*this).get(name));
}

const Parameter& ParameterSet::get(const std::string& name) const {
    const auto* p = find(name);
    if (!p) throw ContractViolation("unknown parameter: " + name);
    return *p;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p->grad.fill(0.0);
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t.data) v = rng.uniform(-limit, limit);
}

}  // namespace chatmine::nn
