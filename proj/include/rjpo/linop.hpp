#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "rjpo/errors.hpp"
#include "rjpo/fft2.hpp"

namespace rjpo {

using Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Image extent. Images are flattened in row-major order everywhere.
struct ImageDims {
  Index rows = 0;
  Index cols = 0;
  Index size() const { return rows * cols; }
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

struct PixelOffset {
  Index row = 0;
  Index col = 0;
};

/// A linear map R^in_dim -> R^out_dim with its adjoint.
///
/// Concrete operators are immutable once built and are shared between chains
/// through `OperatorPtr`. The public `apply` functions check shapes; the
/// protected kernels write into caller-provided storage.
template <typename Scalar>
class LinearOperator {
 public:
  using VectorType = Vector<Scalar>;
  using ConstRef = Eigen::Ref<const VectorType>;
  using Ref = Eigen::Ref<VectorType>;

  virtual ~LinearOperator() = default;

  virtual Index in_dim() const = 0;
  virtual Index out_dim() const = 0;

  VectorType apply(ConstRef v) const {
    VectorType out(out_dim());
    apply_into(v, out);
    return out;
  }

  VectorType apply_transpose(ConstRef v) const {
    VectorType out(in_dim());
    apply_transpose_into(v, out);
    return out;
  }

  void apply_into(ConstRef v, Ref out) const {
    check_size(v.size(), in_dim(), "apply");
    check_size(out.size(), out_dim(), "apply (output)");
    do_apply(v, out);
  }

  void apply_transpose_into(ConstRef v, Ref out) const {
    check_size(v.size(), out_dim(), "apply_transpose");
    check_size(out.size(), in_dim(), "apply_transpose (output)");
    do_apply_transpose(v, out);
  }

 protected:
  virtual void do_apply(ConstRef in, Ref out) const = 0;
  virtual void do_apply_transpose(ConstRef in, Ref out) const = 0;

 private:
  static void check_size(Index got, Index want, const char* what) {
    if (got != want)
      throw ArgumentError(std::string(what) + ": expected vector of size " + std::to_string(want) +
                          ", got " + std::to_string(got));
  }
};

template <typename Scalar>
using OperatorPtr = std::shared_ptr<const LinearOperator<Scalar>>;

// ---------------------------------------------------------------------------
// Dense

template <typename Scalar>
class DenseOperator final : public LinearOperator<Scalar> {
 public:
  using typename LinearOperator<Scalar>::ConstRef;
  using typename LinearOperator<Scalar>::Ref;

  explicit DenseOperator(Matrix<Scalar> m) : m_(std::move(m)) {
    if (m_.rows() == 0 || m_.cols() == 0) throw ConfigError("dense operator: empty matrix");
    if (!m_.allFinite()) throw ConfigError("dense operator: non-finite entries");
  }

  Index in_dim() const override { return m_.cols(); }
  Index out_dim() const override { return m_.rows(); }
  const Matrix<Scalar>& matrix() const { return m_; }

 protected:
  void do_apply(ConstRef in, Ref out) const override { out.noalias() = m_ * in; }
  void do_apply_transpose(ConstRef in, Ref out) const override {
    out.noalias() = m_.transpose() * in;
  }

 private:
  Matrix<Scalar> m_;
};

template <typename Scalar>
OperatorPtr<Scalar> dense_operator(Matrix<Scalar> m) {
  return std::make_shared<DenseOperator<Scalar>>(std::move(m));
}

// ---------------------------------------------------------------------------
// Circulant convolution on a periodic image

/// Circular 2-D convolution y = k (*) x with periodic boundaries, via FFT.
///
/// `origin` is the kernel entry placed at the convolution origin; the kernel is
/// circularly shifted at construction so that a centred stencil can be passed
/// as is. The transfer function is fixed after construction.
template <typename Scalar>
class CirculantOperator final : public LinearOperator<Scalar> {
 public:
  using typename LinearOperator<Scalar>::ConstRef;
  using typename LinearOperator<Scalar>::Ref;

  CirculantOperator(const Eigen::MatrixXd& kernel, ImageDims dims, PixelOffset origin = {})
      : dims_(dims), fft_(dims.rows, dims.cols) {
    if (kernel.rows() > dims.rows || kernel.cols() > dims.cols)
      throw ConfigError("circulant operator: kernel larger than image");
    if (kernel.size() == 0) throw ConfigError("circulant operator: empty kernel");
    if (origin.row < 0 || origin.col < 0 || origin.row >= kernel.rows() ||
        origin.col >= kernel.cols())
      throw ConfigError("circulant operator: kernel origin outside kernel");
    if (!kernel.allFinite()) throw ConfigError("circulant operator: non-finite kernel");

    Eigen::VectorXd embedded = Eigen::VectorXd::Zero(dims.size());
    for (Index a = 0; a < kernel.rows(); ++a) {
      for (Index b = 0; b < kernel.cols(); ++b) {
        const Index r = wrap(a - origin.row, dims.rows);
        const Index c = wrap(b - origin.col, dims.cols);
        embedded[r * dims.cols + c] += kernel(a, b);
      }
    }
    transfer_.resize(fft_.spectrum_size());
    fft_.forward(embedded.data(), transfer_.data());
  }

  Index in_dim() const override { return dims_.size(); }
  Index out_dim() const override { return dims_.size(); }
  ImageDims dims() const { return dims_; }

  /// Half-spectrum transfer function (unscaled forward FFT of the embedded kernel).
  const Eigen::VectorXcd& transfer_function() const { return transfer_; }

 protected:
  void do_apply(ConstRef in, Ref out) const override { filter(in, out, false); }
  void do_apply_transpose(ConstRef in, Ref out) const override { filter(in, out, true); }

 private:
  static Index wrap(Index i, Index n) { return ((i % n) + n) % n; }

  void filter(ConstRef in, Ref out, bool adjoint) const {
    Eigen::VectorXd image = in.template cast<double>();
    Eigen::VectorXcd spectrum(fft_.spectrum_size());
    fft_.forward(image.data(), spectrum.data());
    if (adjoint)
      spectrum.array() *= transfer_.array().conjugate();
    else
      spectrum.array() *= transfer_.array();
    fft_.inverse(spectrum.data(), image.data());
    out = (image / static_cast<double>(dims_.size())).template cast<Scalar>();
  }

  ImageDims dims_;
  RealFft2 fft_;
  Eigen::VectorXcd transfer_;
};

template <typename Scalar>
OperatorPtr<Scalar> circulant_operator(const Eigen::MatrixXd& kernel, ImageDims dims,
                                       PixelOffset origin = {}) {
  return std::make_shared<CirculantOperator<Scalar>>(kernel, dims, origin);
}

// ---------------------------------------------------------------------------
// Decimation

/// Selects the pixels with row = offset.row (mod factor) and col = offset.col (mod factor).
template <typename Scalar>
class DecimationOperator final : public LinearOperator<Scalar> {
 public:
  using typename LinearOperator<Scalar>::ConstRef;
  using typename LinearOperator<Scalar>::Ref;

  DecimationOperator(ImageDims dims, Index factor, PixelOffset offset)
      : dims_(dims), factor_(factor), offset_(offset) {
    if (factor <= 0) throw ConfigError("decimation: factor must be positive");
    if (dims.rows <= 0 || dims.cols <= 0) throw ConfigError("decimation: empty image");
    if (dims.rows % factor != 0 || dims.cols % factor != 0)
      throw ConfigError("decimation: factor must divide both image dimensions");
    if (offset.row < 0 || offset.col < 0 || offset.row >= factor || offset.col >= factor)
      throw ConfigError("decimation: offset out of range");
    low_ = {dims.rows / factor, dims.cols / factor};
  }

  Index in_dim() const override { return dims_.size(); }
  Index out_dim() const override { return low_.size(); }
  ImageDims low_dims() const { return low_; }

 protected:
  void do_apply(ConstRef in, Ref out) const override {
    for (Index i = 0; i < low_.rows; ++i)
      for (Index j = 0; j < low_.cols; ++j) out[i * low_.cols + j] = in[source(i, j)];
  }

  void do_apply_transpose(ConstRef in, Ref out) const override {
    out.setZero();
    for (Index i = 0; i < low_.rows; ++i)
      for (Index j = 0; j < low_.cols; ++j) out[source(i, j)] = in[i * low_.cols + j];
  }

 private:
  Index source(Index i, Index j) const {
    return (i * factor_ + offset_.row) * dims_.cols + j * factor_ + offset_.col;
  }

  ImageDims dims_;
  ImageDims low_;
  Index factor_;
  PixelOffset offset_;
};

template <typename Scalar>
OperatorPtr<Scalar> decimation_operator(ImageDims dims, Index factor, PixelOffset offset) {
  return std::make_shared<DecimationOperator<Scalar>>(dims, factor, offset);
}

// ---------------------------------------------------------------------------
// Composition and stacking

/// outer * inner.
template <typename Scalar>
class ComposedOperator final : public LinearOperator<Scalar> {
 public:
  using typename LinearOperator<Scalar>::ConstRef;
  using typename LinearOperator<Scalar>::Ref;

  ComposedOperator(OperatorPtr<Scalar> outer, OperatorPtr<Scalar> inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {
    if (!outer_ || !inner_) throw ConfigError("compose: null operator");
    if (outer_->in_dim() != inner_->out_dim())
      throw ConfigError("compose: inner output and outer input dimensions differ");
  }

  Index in_dim() const override { return inner_->in_dim(); }
  Index out_dim() const override { return outer_->out_dim(); }

 protected:
  void do_apply(ConstRef in, Ref out) const override {
    Vector<Scalar> mid(inner_->out_dim());
    inner_->apply_into(in, mid);
    outer_->apply_into(mid, out);
  }
  void do_apply_transpose(ConstRef in, Ref out) const override {
    Vector<Scalar> mid(outer_->in_dim());
    outer_->apply_transpose_into(in, mid);
    inner_->apply_transpose_into(mid, out);
  }

 private:
  OperatorPtr<Scalar> outer_;
  OperatorPtr<Scalar> inner_;
};

template <typename Scalar>
OperatorPtr<Scalar> compose(OperatorPtr<Scalar> outer, OperatorPtr<Scalar> inner) {
  return std::make_shared<ComposedOperator<Scalar>>(std::move(outer), std::move(inner));
}

template <typename Scalar>
struct WeightedOperator {
  Scalar weight;
  OperatorPtr<Scalar> op;
};

/// F = [sqrt(w1) F1; sqrt(w2) F2; ...], so that F'F = sum_i w_i Fi'Fi.
template <typename Scalar>
class StackedOperator final : public LinearOperator<Scalar> {
 public:
  using typename LinearOperator<Scalar>::ConstRef;
  using typename LinearOperator<Scalar>::Ref;

  explicit StackedOperator(std::vector<WeightedOperator<Scalar>> blocks)
      : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw ConfigError("stacked factor: empty operator list");
    const Index n = blocks_.front().op ? blocks_.front().op->in_dim() : 0;
    for (const auto& b : blocks_) {
      if (!b.op) throw ConfigError("stacked factor: null operator");
      if (!(b.weight > Scalar(0))) throw ConfigError("stacked factor: weights must be positive");
      if (b.op->in_dim() != n) throw ConfigError("stacked factor: operators differ in input size");
      scales_.push_back(std::sqrt(b.weight));
      out_dim_ += b.op->out_dim();
    }
    in_dim_ = n;
  }

  Index in_dim() const override { return in_dim_; }
  Index out_dim() const override { return out_dim_; }
  const std::vector<WeightedOperator<Scalar>>& blocks() const { return blocks_; }

 protected:
  void do_apply(ConstRef in, Ref out) const override {
    Index offset = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const Index m = blocks_[i].op->out_dim();
      Ref segment(out.segment(offset, m));
      blocks_[i].op->apply_into(in, segment);
      segment *= scales_[i];
      offset += m;
    }
  }

  void do_apply_transpose(ConstRef in, Ref out) const override {
    out.setZero();
    Vector<Scalar> part(in_dim_);
    Index offset = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const Index m = blocks_[i].op->out_dim();
      blocks_[i].op->apply_transpose_into(in.segment(offset, m), part);
      out += scales_[i] * part;
      offset += m;
    }
  }

 private:
  std::vector<WeightedOperator<Scalar>> blocks_;
  std::vector<Scalar> scales_;
  Index in_dim_ = 0;
  Index out_dim_ = 0;
};

template <typename Scalar>
OperatorPtr<Scalar> stacked_factor(std::vector<WeightedOperator<Scalar>> blocks) {
  return std::make_shared<StackedOperator<Scalar>>(std::move(blocks));
}

// ---------------------------------------------------------------------------
// Factored precision and Gaussian targets

/// Precision Q = F'F held through its factor F: R^N -> R^N'.
template <typename Scalar>
class FactoredPrecision {
 public:
  using VectorType = Vector<Scalar>;

  explicit FactoredPrecision(OperatorPtr<Scalar> factor) : factor_(std::move(factor)) {
    if (!factor_) throw ConfigError("factored precision: null factor");
  }

  Index dim() const { return factor_->in_dim(); }
  Index factor_rows() const { return factor_->out_dim(); }
  const LinearOperator<Scalar>& factor() const { return *factor_; }
  const OperatorPtr<Scalar>& factor_ptr() const { return factor_; }

  VectorType apply(const Eigen::Ref<const VectorType>& v) const {
    VectorType out(dim());
    apply_into(v, out);
    return out;
  }

  void apply_into(const Eigen::Ref<const VectorType>& v, Eigen::Ref<VectorType> out) const {
    VectorType mid(factor_->out_dim());
    factor_->apply_into(v, mid);
    factor_->apply_transpose_into(mid, out);
  }

  /// Assembles Q column by column. Test and small-problem use only.
  Matrix<Scalar> to_dense() const {
    const Index n = dim();
    Matrix<Scalar> q(n, n);
    VectorType e = VectorType::Zero(n);
    for (Index j = 0; j < n; ++j) {
      e[j] = Scalar(1);
      q.col(j) = apply(e);
      e[j] = Scalar(0);
    }
    return q;
  }

 private:
  OperatorPtr<Scalar> factor_;
};

/// Gram operator F'F exposed as a LinearOperator.
template <typename Scalar>
class GramOperator final : public LinearOperator<Scalar> {
 public:
  using typename LinearOperator<Scalar>::ConstRef;
  using typename LinearOperator<Scalar>::Ref;

  explicit GramOperator(FactoredPrecision<Scalar> q) : q_(std::move(q)) {}
  Index in_dim() const override { return q_.dim(); }
  Index out_dim() const override { return q_.dim(); }

 protected:
  void do_apply(ConstRef in, Ref out) const override { q_.apply_into(in, out); }
  void do_apply_transpose(ConstRef in, Ref out) const override { q_.apply_into(in, out); }

 private:
  FactoredPrecision<Scalar> q_;
};

template <typename Scalar>
OperatorPtr<Scalar> gram(OperatorPtr<Scalar> factor) {
  return std::make_shared<GramOperator<Scalar>>(FactoredPrecision<Scalar>(std::move(factor)));
}

/// Dense copy of (Q, mu) kept next to a matrix-free target for oracle checks.
template <typename Scalar>
struct DenseMirror {
  Matrix<Scalar> precision;
  Vector<Scalar> mean;
  Eigen::LLT<Matrix<Scalar>> cholesky;

  DenseMirror(Matrix<Scalar> q, Vector<Scalar> mu)
      : precision(std::move(q)), mean(std::move(mu)), cholesky(precision) {
    if (precision.rows() != precision.cols() || precision.rows() != mean.size())
      throw ConfigError("dense mirror: inconsistent dimensions");
    if (cholesky.info() != Eigen::Success)
      throw ConfigError("dense mirror: precision is not positive definite");
  }
};

/// N(mu, Q^-1) held as (factored Q, potential Q mu).
template <typename Scalar>
struct GaussianTarget {
  FactoredPrecision<Scalar> precision;
  Vector<Scalar> potential;
  std::shared_ptr<const DenseMirror<Scalar>> mirror;

  GaussianTarget(FactoredPrecision<Scalar> q, Vector<Scalar> qmu,
                 std::shared_ptr<const DenseMirror<Scalar>> dense = nullptr)
      : precision(std::move(q)), potential(std::move(qmu)), mirror(std::move(dense)) {
    if (potential.size() != precision.dim())
      throw ConfigError("gaussian target: potential size differs from precision dimension");
    if (mirror && mirror->mean.size() != precision.dim())
      throw ConfigError("gaussian target: dense mirror dimension differs");
  }

  Index dim() const { return precision.dim(); }
  bool has_mirror() const { return static_cast<bool>(mirror); }
};

}  // namespace rjpo
