#ifndef RERE_NN_HPP
#define RERE_NN_HPP

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Minimal hand-differentiated building blocks for the recurrent encoder and
// the sigmoid heads: parameters with gradient buffers, an LSTM direction with
// explicit forward/backward passes, and Adam.
namespace rere::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Portable random source. std::*_distribution output differs between
// standard libraries, so every draw goes through these helpers instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform in [0, n) by rejection; n must be positive.
  std::size_t below(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
  }
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

using ParameterRefs = std::vector<Parameter*>;

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

template <typename Derived>
Matrix sigmoid(const Eigen::MatrixBase<Derived>& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

void init_uniform(Matrix& m, double scale, Rng& rng);

// Rescales all gradients so their joint L2 norm is at most max_norm; returns
// the norm before clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(const ParameterRefs& params, double max_norm);

class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  // Applies one update to every parameter from its grad buffer. The
  // parameter list must be the same (same order) on every call.
  void step(const ParameterRefs& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

// Activations kept from a forward pass for the backward pass.
struct LstmTrace {
  Matrix input;       // in x T
  Matrix gates;       // 4h x T, activated (i, f, g, o)
  Matrix cells;       // h x T
  Matrix tanh_cells;  // h x T
  Matrix hidden;      // h x T
};

// One left-to-right LSTM pass over the columns of its input. Gate order in
// the stacked weights is (input, forget, cell, output).
class LstmDirection {
 public:
  LstmDirection() = default;
  LstmDirection(std::string prefix, int input_dim, int hidden_dim);

  void initialize(Rng& rng);
  int hidden_dim() const noexcept { return hidden_; }

  // x: input_dim x T. Returns hidden_dim x T. The trace is filled when non-null.
  Matrix forward(const Matrix& x, LstmTrace* trace) const;
  // Accumulates parameter gradients and returns d loss / d input.
  Matrix backward(const LstmTrace& trace, const Matrix& d_hidden);

  ParameterRefs parameters() { return {&wx_, &wh_, &b_}; }

 private:
  int hidden_ = 0;
  Parameter wx_, wh_, b_;
};

}  // namespace rere::nn

#endif  // RERE_NN_HPP
