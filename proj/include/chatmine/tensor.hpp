#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace chatmine::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor of doubles.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0);

    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }
    bool empty() const { return data.empty(); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols(), cols()}; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols(), cols()}; }

    void fill(double v);
    bool all_finite() const;
};

/// Seeded generator. Draws are built from raw 64-bit output so sequences are
/// identical across standard library implementations.
class Rng {
 public:
    explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }
    double uniform();                            // [0, 1)
    double uniform(double lo, double hi);
    std::size_t index(std::size_t n);            // [0, n), unbiased
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

 private:
    std::mt19937_64 gen_;
};

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

/// Named parameters with stable addresses; names are unique.
class ParameterSet {
 public:
    Parameter& add(const std::string& name, Shape shape);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    const Parameter* find(const std::string& name) const;

    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

    Parameter& operator[](std::size_t i) { return *params_[i]; }
    const Parameter& operator[](std::size_t i) const { return *params_[i]; }

    void zero_grad();

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.cbegin(); }
    auto end() const { return params_.cend(); }

 private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace chatmine::nn
