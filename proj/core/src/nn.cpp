#include "rere/nn.hpp"

#include <cmath>

namespace rere::nn {

void init_uniform(Matrix& m, double scale, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-scale, scale);
}

double clip_grad_norm(const ParameterRefs& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto* p : params) p->grad *= scale;
  }
  return norm;
}

void Adam::step(const ParameterRefs& params) {
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (const auto* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
    t_ = 0;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= step * m_[i].array() / (v_[i].array().sqrt() + eps_ * std::sqrt(c2));
  }
}

LstmDirection::LstmDirection(std::string prefix, int input_dim, int hidden_dim)
    : hidden_(hidden_dim),
      wx_(prefix + ".wx", 4 * hidden_dim, input_dim),
      wh_(prefix + ".wh", 4 * hidden_dim, hidden_dim),
      b_(prefix + ".b", 4 * hidden_dim, 1) {}

void LstmDirection::initialize(Rng& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_));
  init_uniform(wx_.value, scale, rng);
  init_uniform(wh_.value, scale, rng);
  b_.value.setZero();
  b_.value.block(hidden_, 0, hidden_, 1).setOnes();  // forget-gate bias
}

Matrix LstmDirection::forward(const Matrix& x, LstmTrace* trace) const {
  const Eigen::Index h = hidden_;
  const Eigen::Index steps = x.cols();
  Matrix pre = wx_.value * x;
  pre.colwise() += b_.value.col(0);

  Matrix hidden(h, steps);
  Matrix gates, cells, tanh_cells;
  if (trace) {
    gates.resize(4 * h, steps);
    cells.resize(h, steps);
    tanh_cells.resize(h, steps);
  }
  Vector h_prev = Vector::Zero(h), c_prev = Vector::Zero(h);
  Vector z(4 * h);
  for (Eigen::Index t = 0; t < steps; ++t) {
    z.noalias() = pre.col(t) + wh_.value * h_prev;
    for (Eigen::Index k = 0; k < h; ++k) {
      z(k) = sigmoid(z(k));
      z(h + k) = sigmoid(z(h + k));
      z(2 * h + k) = std::tanh(z(2 * h + k));
      z(3 * h + k) = sigmoid(z(3 * h + k));
    }
    for (Eigen::Index k = 0; k < h; ++k) {
      const double c = z(h + k) * c_prev(k) + z(k) * z(2 * h + k);
      const double tc = std::tanh(c);
      c_prev(k) = c;
      h_prev(k) = z(3 * h + k) * tc;
      if (trace) {
        cells(k, t) = c;
        tanh_cells(k, t) = tc;
      }
    }
    hidden.col(t) = h_prev;
    if (trace) gates.col(t) = z;
  }
  if (trace) {
    trace->input = x;
    trace->gates = std::move(gates);
    trace->cells = std::move(cells);
    trace->tanh_cells = std::move(tanh_cells);
    trace->hidden = hidden;
  }
  return hidden;
}

Matrix LstmDirection::backward(const LstmTrace& trace, const Matrix& d_hidden) {
  const Eigen::Index h = hidden_;
  const Eigen::Index steps = trace.input.cols();
  Matrix dz(4 * h, steps);
  Vector dh_next = Vector::Zero(h), dc_next = Vector::Zero(h);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto g = trace.gates.col(t);
    Vector dh = d_hidden.col(t) + dh_next;
    for (Eigen::Index k = 0; k < h; ++k) {
      const double i = g(k), f = g(h + k), c_hat = g(2 * h + k), o = g(3 * h + k);
      const double tc = trace.tanh_cells(k, t);
      const double c_prev = t > 0 ? trace.cells(k, t - 1) : 0.0;
      const double dc = dh(k) * o * (1.0 - tc * tc) + dc_next(k);
      dz(k, t) = dc * c_hat * i * (1.0 - i);
      dz(h + k, t) = dc * c_prev * f * (1.0 - f);
      dz(2 * h + k, t) = dc * i * (1.0 - c_hat * c_hat);
      dz(3 * h + k, t) = dh(k) * tc * o * (1.0 - o);
      dc_next(k) = dc * f;
    }
    dh_next.noalias() = wh_.value.transpose() * dz.col(t);
  }
  wx_.grad.noalias() += dz * trace.input.transpose();
  if (steps > 1) wh_.grad.noalias() += dz.rightCols(steps - 1) * trace.hidden.leftCols(steps - 1).transpose();
  b_.grad.col(0) += dz.rowwise().sum();
  return wx_.value.transpose() * dz;
}

}  // namespace rere::nn
