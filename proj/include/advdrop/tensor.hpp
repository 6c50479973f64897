#ifndef ADVDROP_TENSOR_HPP
#define ADVDROP_TENSOR_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace advdrop {

using Shape = std::vector<std::size_t>;

// Dense row-major tensor of 64-bit reals. Values are immutable by
// convention once shared across threads; all operations allocate fresh
// storage unless they say otherwise.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  // Rank-2 convenience: rows given as nested initializer data.
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor vector(std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at2(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  // Returns a copy reshaped to `shape` (element count must match).
  Tensor reshaped(Shape shape) const;

  // In-place arithmetic; shapes must match exactly.
  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);
  // this += s * other
  void add_scaled(const Tensor& other, double s);

  double sum() const;
  double max_abs() const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::string shape_to_string(const Shape& shape);

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);
Tensor hadamard(const Tensor& a, const Tensor& b);

// Matrix products on rank-2 tensors. Inner dimensions are checked and a
// ShapeError naming both shapes is thrown on mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);     // a[m,k] * b[k,n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T * b, a[k,m], b[k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T, a[m,k], b[n,k]

}  // namespace advdrop

#endif
